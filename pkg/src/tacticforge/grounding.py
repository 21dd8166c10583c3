"""Merge narration tokens with logged events into grounded transcripts.

Grounding aligns word tokens and events by timestamp and injects bracketed
text for each event so the synthesized-from text carries the evidence inline.
Injected templates (pinned by tests):

  action          [<actor> passed to <object>] / [<actor> shot toward <object>]
                  / [<actor> moved] / [<actor> called for a pass]
                  / generic: [<actor> <verb> <object>]
  annotation      [user marked coordinate (x, y)]   (1-decimal coordinates)
  condition-hint  [condition <expr> is <true|false>]
  system speech   [system said: <text>]             (feedback grounding only)

On equal timestamps the token precedes the event: the narration motivates,
the event evidences.
"""
from __future__ import annotations

from dataclasses import dataclass

from .core import DemoEvent, DemonstrationTrace, DomainError, ExecutionTrace


@dataclass(frozen=True)
class Segment:
    kind: str   # token | event | speak
    text: str
    t: float
    source: str = ""


@dataclass(frozen=True)
class GroundedTranscript:
    trace_id: str
    segments: tuple[Segment, ...]

    def __post_init__(self) -> None:
        ts = [s.t for s in self.segments]
        if ts != sorted(ts):
            raise DomainError("transcript segments must be time-ordered")

    def to_dict(self) -> dict:
        return {
            "trace_id": self.trace_id,
            "segments": [
                {"kind": s.kind, "text": s.text, "t": s.t} for s in self.segments
            ],
        }


@dataclass(frozen=True)
class FeedbackSession:
    """User feedback captured against a decision flow or a live run.

    flow kind: annotated node/edge ids plus a token stream.
    execution kind: the run's trace id, pause ticks, marked coordinates
    ((tick, x, y)), and a token stream; token timestamps are ticks.
    """

    kind: str
    tokens: tuple = ()        # ((t, word), ...)
    node_ids: tuple = ()
    edge_ids: tuple = ()
    trace_id: str = ""
    pause_ticks: tuple = ()
    marks: tuple = ()         # ((tick, x, y), ...)

    def __post_init__(self) -> None:
        if self.kind not in ("flow", "execution"):
            raise DomainError(f"unknown feedback kind {self.kind!r}")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "tokens": [[t, w] for t, w in self.tokens],
            "node_ids": list(self.node_ids),
            "edge_ids": list(self.edge_ids),
            "trace_id": self.trace_id,
            "pause_ticks": list(self.pause_ticks),
            "marks": [list(m) for m in self.marks],
        }

    @staticmethod
    def from_dict(d: dict) -> "FeedbackSession":
        return FeedbackSession(
            kind=d["kind"],
            tokens=tuple((t, w) for t, w in d.get("tokens", ())),
            node_ids=tuple(d.get("node_ids", ())),
            edge_ids=tuple(d.get("edge_ids", ())),
            trace_id=d.get("trace_id", ""),
            pause_ticks=tuple(d.get("pause_ticks", ())),
            marks=tuple(tuple(m) for m in d.get("marks", ())),
        )


def render_event(event: DemoEvent) -> str:
    p = event.payload
    if event.kind == "annotation":
        return f"[user marked coordinate ({p['x']:.1f}, {p['y']:.1f})]"
    if event.kind == "condition-hint":
        value = "true" if p["value"] else "false"
        return f"[condition {p['expr']} is {value}]"
    verb, actor, obj = p.get("verb", ""), p.get("actor", ""), p.get("object", "")
    if verb == "Pass":
        return f"[{actor} passed to {obj}]"
    if verb == "Shoot":
        return f"[{actor} shot toward {obj}]"
    if verb == "MoveTo":
        return f"[{actor} moved]"
    if verb == "TriggerTeammatePass":
        return f"[{actor} called for a pass]"
    body = " ".join(part for part in (actor, verb, obj) if part)
    return f"[{body}]"


def ground(trace: DemonstrationTrace) -> GroundedTranscript:
    """Stable timestamp merge of tokens and events; token first on ties."""
    items: list[tuple] = []
    for i, tok in enumerate(trace.tokens):
        items.append((tok.t, 0, i, Segment("token", tok.text, tok.t)))
    for j, event in enumerate(trace.events):
        seg = Segment("event", render_event(event), event.t, source=f"{trace.id}#e{j}")
        items.append((event.t, 1, j, seg))
    items.sort(key=lambda it: (it[0], it[1], it[2]))
    return GroundedTranscript(trace.id, tuple(it[3] for it in items))


def render(transcript: GroundedTranscript) -> str:
    return " ".join(seg.text for seg in transcript.segments)


def ground_feedback(trace: ExecutionTrace, session: FeedbackSession) -> GroundedTranscript:
    """Interleave user feedback with the run's Speak lines, positioned by tick.

    The system's narration lands before user words at the same tick, giving
    downstream repair the same debug-print anchors the user reacted to.
    """
    if session.kind != "execution":
        raise DomainError("only execution feedback grounds against a trace")
    last_tick = trace.states[-1].tick if trace.states else trace.termination.get("tick", 0)
    for t in session.pause_ticks:
        if not 0 <= t <= last_tick:
            raise DomainError(f"pause tick {t} outside trace")
    items: list[tuple] = []
    for i, sp in enumerate(trace.speaks):
        seg = Segment("speak", f"[system said: {sp.text}]", float(sp.tick),
                      source=f"{trace.id}#s{i}")
        items.append((float(sp.tick), 0, i, seg))
    for i, (t, word) in enumerate(session.tokens):
        items.append((float(t), 1, i, Segment("token", word, float(t))))
    for i, (t, x, y) in enumerate(session.marks):
        if not 0 <= t <= last_tick:
            raise DomainError(f"mark tick {t} outside trace")
        seg = Segment("event", f"[user marked coordinate ({x:.1f}, {y:.1f})]",
                      float(t), source=f"feedback#m{i}")
        items.append((float(t), 2, i, seg))
    items.sort(key=lambda it: (it[0], it[1], it[2]))
    return GroundedTranscript(trace.id, tuple(it[3] for it in items))
