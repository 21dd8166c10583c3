"""Compile behavior ASTs into hierarchical interrupt-driven state machines
and execute them tick by tick.

Machine shape: action states carry a call plus an optional interrupt
condition; each expands conceptually into the act -> wait micro-machine, with
the interrupt firing even while the action is still in progress. Decision
states (explicit Wait-until, if/while heads) only route on their ordered
guard edges. Speak payloads ride the transition into a state and freeze the
world for ceil(words/3) ticks when emitted.

Tick discipline (both this runtime and any independent interpreter of the
same programs must agree on it):
  - at most one guard edge fires per tick; the tick an action exits, its
    state's guards are evaluated immediately (exit and hop may share a tick);
  - a decision state entered at tick k first evaluates guards at k+1;
  - an action state entered at tick k issues its start command at k, and its
    interrupt/completion are first checked at k+1;
  - a speak freeze of F ticks delays the entered state's schedule by F.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .constraints import Call, CondExpr, TrueExpr, canonical_string, leaves
from .dsl import (
    Behavior, BehaviorProgram, DoAction, DoWaitUntil, If, SpeakStmt, Terminate,
    While,
)
from .registry import ApiRegistry

DEADLOCK_WINDOW = 100  # ticks (10 s at dt = 0.1 s)


def speak_freeze_ticks(text: str) -> int:
    return max(1, math.ceil(len(text.split()) / 3))


# ---------------------------------------------------------------------------
# machine structure


@dataclass(frozen=True)
class FsmState:
    id: str
    kind: str                      # action | decision | terminal
    label: str
    call: Call | None = None
    interrupt: CondExpr | None = None
    line: int = 0


@dataclass(frozen=True)
class FsmEdge:
    src: str
    dst: str
    guard: CondExpr
    speaks: tuple = ()             # ((text, source line), ...)
    order: int = 0                 # evaluation rank among the source's edges

    def guard_text(self) -> str:
        return canonical_string(self.guard)


@dataclass(frozen=True)
class Fsm:
    states: dict
    edges: tuple[FsmEdge, ...]
    entry: str
    entry_speaks: tuple = ()

    def out_edges(self, state_id: str) -> list[FsmEdge]:
        return sorted((e for e in self.edges if e.src == state_id),
                      key=lambda e: e.order)

    def terminal_ids(self) -> list[str]:
        return [s.id for s in self.states.values() if s.kind == "terminal"]


# ---------------------------------------------------------------------------
# compilation


class _Lowering:
    """Threads dangling edge stubs through the statement list.

    A stub is an edge whose destination is not yet known: (src id or None for
    the program entry, guard, accumulated speak payloads, evaluation rank).
    The rank is assigned when the stub is created, in textual order, so guard
    evaluation order survives even when a branch's block is pure narration
    and its edge only connects at a later statement.
    """

    def __init__(self, registry: ApiRegistry):
        self.registry = registry
        self.states: dict[str, FsmState] = {}
        self.edges: list[FsmEdge] = []
        self.entry: str | None = None
        self.entry_speaks: tuple = ()
        self.labels: dict[str, int] = {}
        self.counter = 0
        self.edge_rank: dict[str, int] = {}

    def new_state(self, kind: str, label_base: str, call=None, interrupt=None,
                  line: int = 0) -> str:
        sid = f"s{self.counter}"
        self.counter += 1
        n = self.labels.get(label_base, 0)
        self.labels[label_base] = n + 1
        label = label_base if n == 0 else f"{label_base}#{n + 1}"
        self.states[sid] = FsmState(sid, kind, label, call, interrupt, line)
        return sid

    def stub(self, src: str, guard: CondExpr) -> tuple:
        rank = self.edge_rank.get(src, 0)
        self.edge_rank[src] = rank + 1
        return (src, guard, [], rank)

    def connect(self, stubs: list, dst: str) -> None:
        for src, guard, speaks, rank in stubs:
            if src is None:
                self.entry = dst
                self.entry_speaks = tuple(speaks)
            else:
                self.edges.append(FsmEdge(src, dst, guard, tuple(speaks), rank))

    def block(self, stmts: tuple, incoming: list) -> list:
        for s in stmts:
            incoming = self.stmt(s, incoming)
        return incoming

    def stmt(self, s, incoming: list) -> list:
        if isinstance(s, SpeakStmt):
            return [(src, guard, speaks + [(s.text, s.line)], rank)
                    for src, guard, speaks, rank in incoming]
        if isinstance(s, DoAction):
            sid = self.new_state("action", canonical_string(s.call),
                                 call=s.call, interrupt=s.until, line=s.line)
            self.connect(incoming, sid)
            return [self.stub(sid, TrueExpr())]
        if isinstance(s, DoWaitUntil):
            sid = self.new_state("decision", "wait", line=s.line)
            self.connect(incoming, sid)
            return [self.stub(sid, s.cond)]
        if isinstance(s, If):
            sid = self.new_state("decision", "branch", line=s.line)
            self.connect(incoming, sid)
            stubs = [self.stub(sid, cond) for cond, _blk in s.branches]
            fallback = self.stub(sid, TrueExpr())
            out: list = []
            for (cond, blk), st in zip(s.branches, stubs):
                out += self.block(blk, [st])
            if s.orelse:
                out += self.block(s.orelse, [fallback])
            else:
                out.append(fallback)
            return out
        if isinstance(s, While):
            sid = self.new_state("decision", "branch", line=s.line)
            self.connect(incoming, sid)
            body_stub = self.stub(sid, s.cond)
            exit_stub = self.stub(sid, TrueExpr())
            body_out = self.block(s.body, [body_stub])
            self.connect(body_out, sid)
            return [exit_stub]
        if isinstance(s, Terminate):
            sid = self.terminal()
            self.connect(incoming, sid)
            return []
        raise TypeError(f"cannot lower statement {s!r}")

    def terminal(self) -> str:
        for st in self.states.values():
            if st.kind == "terminal":
                return st.id
        return self.new_state("terminal", "end")


def compile_program(program: BehaviorProgram, registry: ApiRegistry) -> Fsm:
    """Lower the entry behavior into a state machine. Total over valid ASTs."""
    low = _Lowering(registry)
    entry_behavior: Behavior = program.entry_behavior()
    dangling = low.block(entry_behavior.body, [(None, TrueExpr(), [], 0)])
    if dangling:
        low.connect(dangling, low.terminal())
    if low.entry is None:
        # entry stubs all flowed into the terminal via connect above
        low.entry = low.terminal()
    return Fsm(low.states, tuple(low.edges), low.entry, low.entry_speaks)


def fsm_stats(fsm: Fsm) -> dict:
    kinds = {"action": 0, "decision": 0, "terminal": 0}
    for st in fsm.states.values():
        kinds[st.kind] += 1
    interrupts = sum(1 for st in fsm.states.values() if st.interrupt is not None)
    return {
        "states": len(fsm.states),
        "edges": len(fsm.edges),
        "action_states": kinds["action"],
        "decision_states": kinds["decision"],
        "terminal_states": kinds["terminal"],
        "interrupt_edges": interrupts,
        "entry": fsm.entry,
    }


# ---------------------------------------------------------------------------
# execution cursor


@dataclass(frozen=True)
class FsmCursor:
    state: str
    sub: str                 # boot | entering | acting | waiting | done
    freeze_left: int = 0     # caption-frozen ticks still to consume
    rest_left: int = 0       # plain idle ticks before a decision evaluates
    started_at: int = -1     # tick the current action issued its start command
    wait_since: int = -1     # tick waiting began (deadlock window anchor)
    ticks_in_state: int = 0


def initial_cursor(fsm: Fsm) -> FsmCursor:
    return FsmCursor(state=fsm.entry, sub="boot")


@dataclass(frozen=True)
class StepResult:
    cursor: FsmCursor
    command: Call | None           # action to start/continue; None = idle
    speaks: tuple                  # ((text, line), ...) emitted this tick
    fired_edge: FsmEdge | None
    action_started: bool           # command is a fresh start this tick
    action_ended: str | None       # completed | interrupted
    reached_terminal: bool
    frozen: bool                   # caption freeze: world must not advance

    def log_line(self, tick: int) -> str:
        cmd = self.command.name if self.command else "idle"
        edge = self.fired_edge.guard_text() if self.fired_edge else "-"
        return f"{tick}|{self.cursor.state}|{self.cursor.sub}|{cmd}|{edge}"


def _enter(fsm: Fsm, dst: str, speaks: tuple, tick: int):
    """Transition bookkeeping for hopping into ``dst`` at ``tick``."""
    freeze = sum(speak_freeze_ticks(t) for t, _line in speaks)
    st = fsm.states[dst]
    if st.kind == "action":
        if freeze == 0:
            cur = FsmCursor(dst, "acting", started_at=tick)
            return cur, st.call, True, False, False
        cur = FsmCursor(dst, "entering", freeze_left=freeze - 1)
        return cur, None, False, False, True
    if st.kind == "decision":
        if freeze == 0:
            cur = FsmCursor(dst, "entering", rest_left=0)
            return cur, None, False, False, False
        cur = FsmCursor(dst, "entering", freeze_left=freeze - 1, rest_left=1)
        return cur, None, False, False, True
    # terminal
    if freeze == 0:
        return FsmCursor(dst, "done"), None, False, True, False
    return FsmCursor(dst, "entering", freeze_left=freeze - 1), None, False, False, True


def step(fsm: Fsm, cursor: FsmCursor, evalc, completed: bool, tick: int) -> StepResult:
    """Advance one tick.

    ``evalc(expr) -> bool`` evaluates conditions against the current world;
    ``completed`` reports whether the active action has finished as of this
    tick. Evaluation order: interrupt, completion, then guards in declaration
    order; the first true guard wins.
    """
    speaks_out: list = []
    fired: FsmEdge | None = None
    started = False
    ended: str | None = None
    c = cursor

    if c.sub == "done":
        return StepResult(c, None, (), None, False, None, True, False)

    if c.sub == "boot":
        c, cmd, started, terminal, frozen = _enter(fsm, fsm.entry, fsm.entry_speaks, tick)
        speaks_out.extend(fsm.entry_speaks)
        return StepResult(c, cmd, tuple(speaks_out), None, started, None, terminal, frozen)

    st = fsm.states[c.state]

    if c.sub == "entering":
        if c.freeze_left > 0:
            c = replace(c, freeze_left=c.freeze_left - 1, ticks_in_state=c.ticks_in_state + 1)
            return StepResult(c, None, (), None, False, None, False, True)
        if c.rest_left > 0:
            c = replace(c, rest_left=c.rest_left - 1, ticks_in_state=c.ticks_in_state + 1)
            return StepResult(c, None, (), None, False, None, False, False)
        # activate the state this tick
        if st.kind == "terminal":
            return StepResult(FsmCursor(st.id, "done"), None, (), None, False, None, True, False)
        if st.kind == "action":
            c = FsmCursor(st.id, "acting", started_at=tick,
                          ticks_in_state=c.ticks_in_state)
            return StepResult(c, st.call, (), None, True, None, False, False)
        c = FsmCursor(st.id, "waiting", wait_since=tick, ticks_in_state=c.ticks_in_state)

    if c.sub == "acting":
        past_start = tick > c.started_at
        if st.interrupt is not None and past_start and evalc(st.interrupt):
            ended = "interrupted"
            c = FsmCursor(st.id, "waiting", wait_since=tick,
                          ticks_in_state=c.ticks_in_state + 1)
        elif past_start and completed:
            ended = "completed"
            c = FsmCursor(st.id, "waiting", wait_since=tick,
                          ticks_in_state=c.ticks_in_state + 1)
        else:
            c = replace(c, ticks_in_state=c.ticks_in_state + 1)
            return StepResult(c, st.call, (), None, False, None, False, False)

    # waiting: evaluate guards in declaration order, first true edge wins
    command = None
    terminal = False
    frozen = False
    for edge in fsm.out_edges(c.state):
        if evalc(edge.guard):
            fired = edge
            speaks_out.extend(edge.speaks)
            c, command, started, terminal, frozen = _enter(fsm, edge.dst, edge.speaks, tick)
            break
    else:
        c = replace(c, ticks_in_state=c.ticks_in_state + 1)
    return StepResult(c, command, tuple(speaks_out), fired, started, ended, terminal, frozen)


# ---------------------------------------------------------------------------
# deadlock detection


@dataclass(frozen=True)
class EdgeTruth:
    guard: str
    value: bool
    leaf_values: tuple  # ((canonical leaf, bool), ...)


@dataclass(frozen=True)
class DeadlockReport:
    state: str
    label: str
    since_tick: int
    edges: tuple[EdgeTruth, ...]

    def to_dict(self) -> dict:
        return {
            "state": self.state,
            "label": self.label,
            "since_tick": self.since_tick,
            "edges": [
                {
                    "guard": e.guard,
                    "value": e.value,
                    "leaves": [{"leaf": name, "value": v} for name, v in e.leaf_values],
                }
                for e in self.edges
            ],
        }

    def blocking_guards(self) -> list[str]:
        return [e.guard for e in self.edges]


def detect_deadlock(fsm: Fsm, cursor: FsmCursor, evalc, window: int,
                    tick: int) -> DeadlockReport | None:
    """Report when the cursor has waited >= window ticks with every guard
    false throughout. Leaf truth values are from the current tick."""
    if window < 1:
        raise ValueError("deadlock window must be >= 1")
    if cursor.sub != "waiting":
        return None
    if tick - cursor.wait_since + 1 < window:
        return None
    infos = []
    for edge in fsm.out_edges(cursor.state):
        if evalc(edge.guard):
            return None
        leaf_vals = tuple(
            (canonical_string(leaf), bool(evalc(leaf))) for leaf in leaves(edge.guard)
        )
        infos.append(EdgeTruth(edge.guard_text(), False, leaf_vals))
    st = fsm.states[cursor.state]
    return DeadlockReport(cursor.state, st.label, cursor.wait_since, tuple(infos))
