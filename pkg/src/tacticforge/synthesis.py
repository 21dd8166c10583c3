"""Program synthesis and repair: prompt assembly, generation clients, the
validate-and-retry loop, a deterministic fallback synthesizer, and structured
edits.

Every path that returns a program has parsed and compiled it first; candidate
text that fails validation is retried with the diagnostic appended to the
prompt, up to the retry budget. Repair prompts always carry the original
demonstration transcripts: feedback refines the teaching, it does not replace
it.
"""
from __future__ import annotations

import difflib
import os
from dataclasses import dataclass
from importlib import resources

from .constraints import Call, CondExpr, Not, Or, SampleExpr, canonical_string
from .core import DemonstrationTrace, DomainError
from .dsl import (
    Behavior, BehaviorProgram, DoAction, DoWaitUntil, DslError, If, SpeakStmt,
    Terminate, While, parse, parse_condition, print_program, walk_stmts,
)
from .fsm import compile_program
from .grounding import FeedbackSession, GroundedTranscript, ground, render
from .registry import ApiRegistry

MAX_RETRIES = 3
FALLBACK_SIGMA = 1.5     # meters; NearPoint spread when generalizing marks
TOKEN_WINDOW = 2.0       # seconds; narration gathered around each action

ENV_ENDPOINT = "TACTICFORGE_LLM_ENDPOINT"
ENV_MODEL = "TACTICFORGE_LLM_MODEL"
ENV_API_KEY = "TACTICFORGE_LLM_API_KEY"
ENV_TIMEOUT = "TACTICFORGE_LLM_TIMEOUT"


class SynthesisError(RuntimeError):
    def __init__(self, message: str, attempts: list):
        super().__init__(message)
        self.attempts = attempts


class EditError(ValueError):
    pass


# ---------------------------------------------------------------------------
# prompt bundles


def _template(template_id: str) -> str:
    return resources.files("tacticforge").joinpath("prompts") \
        .joinpath(f"{template_id}.txt").read_text()


def api_block(registry: ApiRegistry) -> str:
    """One doc line per registry entry, each exactly once."""
    lines = [f"- {sig.doc}" for sig in registry.entries()]
    return "\n".join(lines)


@dataclass(frozen=True)
class PromptBundle:
    template_id: str
    api_docs: str
    transcripts: tuple[str, ...]
    program: str | None = None
    feedback: str | None = None
    flow_annotations: str | None = None
    diagnostics: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.template_id.startswith("repair") and not self.transcripts:
            raise DomainError(
                "repair bundles must include the original demonstration transcripts")

    def render(self) -> str:
        extra_parts = []
        if self.flow_annotations:
            extra_parts.append("Annotated decision-flow elements:\n" + self.flow_annotations)
        if self.diagnostics:
            extra_parts.append(
                "Your previous attempt(s) failed validation:\n"
                + "\n".join(f"- {d}" for d in self.diagnostics)
                + "\nFix the problem and reply with the corrected program only.")
        extra = ("\n" + "\n\n".join(extra_parts)) if extra_parts else ""
        transcripts = "\n\n".join(
            f"[demonstration {i + 1}] {t}" for i, t in enumerate(self.transcripts))
        text = _template(self.template_id)
        return text.format(
            api_docs=self.api_docs,
            transcripts=transcripts,
            program=self.program or "",
            feedback=self.feedback or "",
            extra=extra,
        )


# ---------------------------------------------------------------------------
# generation clients


class StubClient:
    """Scripted client: replays canned responses in order. Deterministic."""

    def __init__(self, responses: list[str]):
        self._responses = list(responses)
        self._cursor = 0
        self.prompts: list[str] = []

    def generate(self, prompt: str, seed: int = 0) -> str:
        self.prompts.append(prompt)
        if self._cursor >= len(self._responses):
            raise SynthesisError("stub client exhausted", [])
        out = self._responses[self._cursor]
        self._cursor += 1
        return out


class LiveClient:
    """Minimal chat-completions HTTP client, configured from the environment."""

    def __init__(self, endpoint: str, model: str, api_key: str = "",
                 timeout: float = 60.0):
        self.endpoint = endpoint
        self.model = model
        self.api_key = api_key
        self.timeout = timeout

    @classmethod
    def from_env(cls) -> "LiveClient":
        endpoint = os.environ.get(ENV_ENDPOINT, "")
        model = os.environ.get(ENV_MODEL, "")
        if not endpoint or not model:
            raise RuntimeError(
                f"live client needs {ENV_ENDPOINT} and {ENV_MODEL} set")
        return cls(endpoint, model, os.environ.get(ENV_API_KEY, ""),
                   float(os.environ.get(ENV_TIMEOUT, "60")))

    def generate(self, prompt: str, seed: int = 0) -> str:
        import httpx

        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "seed": seed,
        }
        resp = httpx.post(self.endpoint, json=payload, headers=headers,
                          timeout=self.timeout)
        resp.raise_for_status()
        return resp.json()["choices"][0]["message"]["content"]


def make_client(kind: str, stub_responses: list[str] | None = None):
    if kind == "stub":
        return StubClient(stub_responses or [])
    if kind == "live":
        return LiveClient.from_env()
    raise ValueError(f"unknown client kind {kind!r}")


# ---------------------------------------------------------------------------
# synthesize / repair loops


def _strip_fences(text: str) -> str:
    body = text.strip()
    if body.startswith("```"):
        lines = body.splitlines()
        if lines[-1].strip().startswith("```"):
            lines = lines[1:-1]
        else:
            lines = lines[1:]
        body = "\n".join(lines)
    return body + "\n"


def _validate(text: str, registry: ApiRegistry) -> BehaviorProgram:
    program = parse(text, registry)
    compile_program(program, registry)
    return program


def _generate_validated(bundle: PromptBundle, registry: ApiRegistry, client,
                        max_retries: int) -> tuple[BehaviorProgram, dict]:
    attempts = []
    diagnostics: list[str] = []
    for attempt in range(1, max_retries + 1):
        prompt = PromptBundle(
            bundle.template_id, bundle.api_docs, bundle.transcripts,
            bundle.program, bundle.feedback, bundle.flow_annotations,
            tuple(diagnostics),
        ).render()
        response = client.generate(prompt, seed=attempt)
        text = _strip_fences(response)
        try:
            program = _validate(text, registry)
        except DslError as err:
            attempts.append({"prompt": prompt, "response": response,
                             "error": str(err)})
            diagnostics.append(str(err))
            continue
        attempts.append({"prompt": prompt, "response": response, "error": None})
        provenance = {
            "template": bundle.template_id,
            "attempts": attempts,
            "attempt_count": attempt,
            "program_text": print_program(program),
        }
        return program, provenance
    raise SynthesisError(
        f"no valid program after {max_retries} attempts", attempts)


def synthesize(transcripts: list[GroundedTranscript | str],
               registry: ApiRegistry, client,
               max_retries: int = MAX_RETRIES) -> tuple[BehaviorProgram, dict]:
    if not transcripts:
        raise DomainError("synthesis needs at least one transcript")
    texts = tuple(t if isinstance(t, str) else render(t) for t in transcripts)
    bundle = PromptBundle("synthesize-v1", api_block(registry), texts)
    return _generate_validated(bundle, registry, client, max_retries)


def repair(program: BehaviorProgram, feedback_text: str,
           transcripts: list[GroundedTranscript | str], registry: ApiRegistry,
           client, max_retries: int = MAX_RETRIES,
           flow_annotations: str | None = None) -> tuple[BehaviorProgram, dict]:
    """Feedback-driven regeneration; provenance records a structural diff."""
    texts = tuple(t if isinstance(t, str) else render(t) for t in transcripts)
    before = print_program(program)
    bundle = PromptBundle("repair-v1", api_block(registry), texts,
                          program=before, feedback=feedback_text,
                          flow_annotations=flow_annotations)
    repaired, provenance = _generate_validated(bundle, registry, client, max_retries)
    provenance["diff"] = structural_diff(program, repaired)
    return repaired, provenance


def flow_feedback_text(session: FeedbackSession, flow) -> str:
    """Render a flow-kind feedback session for the repair prompt."""
    labels = flow.node_labels()
    notes = [f"[user annotated node: {labels.get(n, n)}]" for n in session.node_ids]
    edge_index = {(e.src, e.dst): e for e in flow.edges}
    for eid in session.edge_ids:
        src, _, dst = eid.partition("->")
        e = edge_index.get((src, dst))
        guard = e.guard if e else eid
        notes.append(f"[user annotated edge: {guard}]")
    words = " ".join(w for _t, w in session.tokens)
    return " ".join(notes + ([words] if words else []))


# ---------------------------------------------------------------------------
# structural diff


def structural_diff(before: BehaviorProgram, after: BehaviorProgram) -> dict:
    a = print_program(before).splitlines()
    b = print_program(after).splitlines()
    matcher = difflib.SequenceMatcher(a=a, b=b, autojunk=False)
    added, removed, changed = [], [], []
    for tag, i1, i2, j1, j2 in matcher.get_opcodes():
        if tag == "delete":
            removed.extend(a[i1:i2])
        elif tag == "insert":
            added.extend(b[j1:j2])
        elif tag == "replace":
            changed.extend(list(zip(a[i1:i2], b[j1:j2])))
            extra_a = (i2 - i1) - (j2 - j1)
            if extra_a > 0:
                removed.extend(a[i2 - extra_a:i2])
            elif extra_a < 0:
                added.extend(b[j2 + extra_a:j2])
    cardinality = len(added) + len(removed) + len(changed)
    return {
        "added": [s.strip() for s in added],
        "removed": [s.strip() for s in removed],
        "changed": [[x.strip(), y.strip()] for x, y in changed],
        "cardinality": cardinality,
    }


# ---------------------------------------------------------------------------
# deterministic fallback synthesizer


def _action_events(demo: DemonstrationTrace) -> list:
    return [e for e in demo.events if e.kind == "action"]


def _event_key(event) -> tuple:
    p = event.payload
    return (p.get("verb", ""), p.get("actor", ""), p.get("object", ""))


def _tokens_near(demo: DemonstrationTrace, t: float) -> str:
    words = [tok.text for tok in demo.tokens if abs(tok.t - t) <= TOKEN_WINDOW]
    return " ".join(words)


def _annotation_near(demo: DemonstrationTrace, t: float):
    best, best_d = None, TOKEN_WINDOW
    for e in demo.events:
        if e.kind != "annotation":
            continue
        d = abs(e.t - t)
        if d <= best_d:
            best, best_d = e, d
    return best


def _hint_near(demo: DemonstrationTrace, t: float):
    hints = [e for e in demo.events if e.kind == "condition-hint"]
    if not hints:
        return None
    return min(hints, key=lambda e: abs(e.t - t))


def _action_stmt(demos: list[DemonstrationTrace], events: list,
                 registry: ApiRegistry) -> DoAction:
    """Generalize the i-th common action across demos into one statement."""
    verb, _actor, obj = _event_key(events[0])
    sig = registry.action(verb)
    if sig is None:
        raise DomainError(f"demonstrated action {verb!r} not in registry")
    if sig.params and sig.params[0] == "point":
        points = []
        for demo, event in zip(demos, events):
            ann = _annotation_near(demo, event.t)
            if ann is None:
                raise DomainError(
                    f"no annotated coordinate near {verb} at t={event.t:.1f}")
            pt = (round(ann.payload["x"], 3), round(ann.payload["y"], 3))
            if pt not in points:
                points.append(pt)
        expr: CondExpr = Call("NearPoint", ("self", points[0], FALLBACK_SIGMA))
        for pt in points[1:]:
            expr = Or(expr, Call("NearPoint", ("self", pt, FALLBACK_SIGMA)))
        return DoAction(Call(verb, (SampleExpr(expr),)))
    args = (obj,) if sig.params else ()
    return DoAction(Call(verb, args))


def _speak_for(demo: DemonstrationTrace, t: float) -> list:
    text = _tokens_near(demo, t)
    return [SpeakStmt(text)] if text else []


def _merge(demos: list[DemonstrationTrace], seqs: list[list],
           registry: ApiRegistry) -> list:
    """Common prefix as straight statements, first divergence as a branch."""
    stmts: list = []
    i = 0
    while all(i < len(s) for s in seqs):
        keys = {_event_key(s[i]) for s in seqs}
        if len(keys) != 1:
            break
        events = [s[i] for s in seqs]
        stmts.extend(_speak_for(demos[0], events[0].t))
        stmts.append(_action_stmt(demos, events, registry))
        i += 1
    remaining = [(demo, seq[i:]) for demo, seq in zip(demos, seqs) if len(seq) > i]
    if not remaining:
        return stmts
    if len(remaining) == 1:
        demo, seq = remaining[0]
        for event in seq:
            stmts.extend(_speak_for(demo, event.t))
            stmts.append(_action_stmt([demo], [event], registry))
        return stmts

    # group diverging demos by their condition hint at the branch point
    groups: dict[str, dict] = {}
    for demo, seq in remaining:
        hint = _hint_near(demo, seq[0].t)
        if hint is None:
            raise DomainError("ambiguous branch: no condition hint")
        guard = parse_condition(hint.payload["expr"], registry)
        if not hint.payload["value"]:
            guard = Not(guard)
        key = canonical_string(guard)
        groups.setdefault(key, {"guard": guard, "demos": [], "seqs": []})
        groups[key]["demos"].append(demo)
        groups[key]["seqs"].append(seq)
    branches = []
    for key in sorted(groups):
        g = groups[key]
        block = _merge(g["demos"], g["seqs"], registry)
        if not block:
            raise DomainError("ambiguous branch: empty suffix after divergence")
        branches.append((g["guard"], tuple(block)))
    stmts.append(If(tuple(branches), None))
    return stmts


def fallback_synthesize(demos: list[DemonstrationTrace],
                        registry: ApiRegistry) -> BehaviorProgram:
    """Deterministic synthesis from demonstrations with condition hints."""
    if not demos:
        raise DomainError("fallback synthesis needs at least one demonstration")
    if len({d.scenario_id for d in demos}) != 1:
        raise DomainError("demonstrations must share a scenario")
    seqs = [_action_events(d) for d in demos]
    if any(not s for s in seqs):
        raise DomainError("demonstration has no action events")
    stmts = _merge(list(demos), seqs, registry)
    stmts.append(Terminate())
    ast = BehaviorProgram(
        (Behavior("LearnedBehavior", (), tuple(stmts)),), entry="LearnedBehavior")
    # round-trip through the grammar: validates and assigns line tags
    return _validate(print_program(ast), registry)


# ---------------------------------------------------------------------------
# structured edits


@dataclass(frozen=True)
class EditOp:
    """kind: delete-stmt | replace-guard | set-move-target | insert-speak."""

    kind: str
    line: int
    arg: object = None


def _locate(program: BehaviorProgram, line: int):
    for behavior in program.behaviors:
        for stmt in walk_stmts(behavior.body):
            if stmt.line == line:
                return stmt
    raise EditError(f"no statement at line {line}")


def _rebuild_block(block: tuple, transform) -> tuple:
    out = []
    for stmt in block:
        replacement = transform(stmt)
        if replacement is _DELETE:
            continue
        if isinstance(replacement, list):
            out.extend(replacement)
            continue
        stmt = replacement
        if isinstance(stmt, If):
            stmt = If(
                tuple((c, _rebuild_block(b, transform)) for c, b in stmt.branches),
                _rebuild_block(stmt.orelse, transform) if stmt.orelse else None,
                line=stmt.line,
            )
        elif isinstance(stmt, While):
            stmt = While(stmt.cond, _rebuild_block(stmt.body, transform), line=stmt.line)
        out.append(stmt)
    if not out:
        raise EditError("edit would empty a block")
    return tuple(out)


_DELETE = object()


def apply_structured_edit(program: BehaviorProgram, ops: list[EditOp],
                          registry: ApiRegistry) -> BehaviorProgram:
    """Apply localized edits, then re-validate through the grammar."""
    for op in ops:
        target = _locate(program, op.line)

        def transform(stmt, _target=target, _op=op):
            if stmt is not _target:
                return stmt
            if _op.kind == "delete-stmt":
                return _DELETE
            if _op.kind == "insert-speak":
                return [SpeakStmt(str(_op.arg)), stmt]
            if _op.kind == "replace-guard":
                guard = _op.arg
                if isinstance(guard, str):
                    guard = parse_condition(guard, registry)
                if isinstance(stmt, DoWaitUntil):
                    return DoWaitUntil(guard, line=stmt.line)
                if isinstance(stmt, While):
                    return While(guard, stmt.body, line=stmt.line)
                if isinstance(stmt, If):
                    branches = ((guard, stmt.branches[0][1]),) + stmt.branches[1:]
                    return If(branches, stmt.orelse, line=stmt.line)
                if isinstance(stmt, DoAction) and stmt.until is not None:
                    return DoAction(stmt.call, guard, line=stmt.line)
                raise EditError(f"statement at line {_op.line} has no guard")
            if _op.kind == "set-move-target":
                if not isinstance(stmt, DoAction):
                    raise EditError(f"line {_op.line} is not an action")
                sig = registry.action(stmt.call.name)
                if not (sig and sig.params and sig.params[0] == "point"):
                    raise EditError(f"{stmt.call.name} takes no target point")
                arg = _op.arg
                if isinstance(arg, tuple):
                    arg = SampleExpr(Call("NearPoint", ("self", arg, FALLBACK_SIGMA)))
                call = Call(stmt.call.name, (arg,) + stmt.call.args[1:],
                            line=stmt.call.line, col=stmt.call.col)
                return DoAction(call, stmt.until, line=stmt.line)
            raise EditError(f"unknown edit kind {_op.kind!r}")

        program = BehaviorProgram(
            tuple(Behavior(b.name, b.params, _rebuild_block(b.body, transform),
                           line=b.line) for b in program.behaviors),
            entry=program.entry,
        )
    return _validate(print_program(program), registry)


def demos_to_transcripts(demos: list[DemonstrationTrace]) -> list[GroundedTranscript]:
    return [ground(d) for d in demos]
