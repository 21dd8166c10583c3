"""Shared domain vocabulary: workspace geometry, entities, world state, traces.

All types here are immutable value data and may be shared freely between
threads. JSON codecs keep a fixed field order so that encode -> decode -> encode
is byte-stable; floats are serialized at full (shortest round-trip) precision.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

# One simulator tick in seconds. Snapshot timestamps are tick * TICK_SECONDS.
TICK_SECONDS = 0.1


class DomainError(ValueError):
    """Invalid domain data (bad geometry, empty inputs, dangling ids)."""


# ---------------------------------------------------------------------------
# geometry and entities


@dataclass(frozen=True)
class GoalRegion:
    id: str
    team: str
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def center(self) -> tuple[float, float]:
        return ((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)

    def contains(self, x: float, y: float) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max


@dataclass(frozen=True)
class Workspace:
    """Axis-aligned rectangular workspace discretized into cols x rows cells."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    cols: int
    rows: int
    goals: tuple[GoalRegion, ...] = ()

    def __post_init__(self) -> None:
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise DomainError("workspace extent must be positive in both axes")
        if self.cols < 2 or self.rows < 2:
            raise DomainError("workspace grid needs at least 2x2 cells")
        for g in self.goals:
            if not (
                self.x_min <= g.x_min < g.x_max <= self.x_max
                and self.y_min <= g.y_min < g.y_max <= self.y_max
            ):
                raise DomainError(f"goal region {g.id!r} outside workspace bounds")

    @property
    def cell_w(self) -> float:
        return (self.x_max - self.x_min) / self.cols

    @property
    def cell_h(self) -> float:
        return (self.y_max - self.y_min) / self.rows

    def contains(self, x: float, y: float) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        """(row, col) of the cell containing the point; edge points clamp inward."""
        c = min(self.cols - 1, max(0, int((x - self.x_min) / self.cell_w)))
        r = min(self.rows - 1, max(0, int((y - self.y_min) / self.cell_h)))
        return r, c

    def cell_center(self, r: int, c: int) -> tuple[float, float]:
        return (
            self.x_min + (c + 0.5) * self.cell_w,
            self.y_min + (r + 0.5) * self.cell_h,
        )

    def goal_by_id(self, goal_id: str) -> GoalRegion:
        for g in self.goals:
            if g.id == goal_id:
                return g
        raise DomainError(f"unknown goal region {goal_id!r}")


def default_workspace(goals: tuple[GoalRegion, ...] = ()) -> Workspace:
    """30 m x 20 m small-sided pitch on a 60 x 40 grid (0.5 m cells)."""
    return Workspace(0.0, 30.0, 0.0, 20.0, cols=60, rows=40, goals=goals)


ROLES = ("avatar", "teammate", "opponent", "ball")


@dataclass(frozen=True)
class Entity:
    id: str
    role: str
    team: str = ""
    radius: float = 0.4

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise DomainError(f"unknown role {self.role!r}")
        if self.radius <= 0:
            raise DomainError("entity radius must be positive")


def check_entities(entities: list[Entity]) -> None:
    ids = [e.id for e in entities]
    if len(set(ids)) != len(ids):
        raise DomainError("entity ids must be unique")
    if sum(1 for e in entities if e.role == "ball") != 1:
        raise DomainError("exactly one entity must have role ball")
    if sum(1 for e in entities if e.role == "avatar") != 1:
        raise DomainError("exactly one entity must have role avatar")


def normalize_angle(a: float) -> float:
    """Wrap an angle into [-pi, pi)."""
    a = math.fmod(a + math.pi, 2.0 * math.pi)
    if a < 0:
        a += 2.0 * math.pi
    return a - math.pi


# ---------------------------------------------------------------------------
# world state


@dataclass(frozen=True)
class WorldState:
    """Kinematic snapshot of every entity at one tick.

    positions/orientations/speeds map entity id -> value. ``possession`` names
    the ball holder, or None while the ball is in flight or loose.
    ``ball_target`` is the flight destination while the ball is airborne.
    """

    tick: int
    positions: dict[str, tuple[float, float]]
    orientations: dict[str, float]
    speeds: dict[str, float]
    possession: str | None = None
    ball_target: tuple[float, float] | None = None

    def pos(self, entity_id: str) -> tuple[float, float]:
        try:
            return self.positions[entity_id]
        except KeyError:
            raise DomainError(f"unknown entity id {entity_id!r}") from None

    def moved(self, **changes) -> "WorldState":
        return replace(self, **changes)


def validate_world(state: WorldState, ws: Workspace, entities: list[Entity]) -> list[str]:
    """Collect every invariant violation; an empty list means the state is ok."""
    known = {e.id for e in entities}
    out: list[str] = []
    for eid, (x, y) in state.positions.items():
        if eid not in known:
            out.append(f"unknown entity id {eid!r} in positions")
        if not ws.contains(x, y):
            out.append(f"out of bounds: {eid!r} at ({x:.3f}, {y:.3f})")
    for eid in known:
        if eid not in state.positions:
            out.append(f"missing position for entity {eid!r}")
    if state.possession is not None:
        if state.possession not in known:
            out.append(f"unknown possession holder {state.possession!r}")
        else:
            role = next(e.role for e in entities if e.id == state.possession)
            if role == "ball":
                out.append("ball cannot possess itself")
    return out


# ---------------------------------------------------------------------------
# demonstration traces

EVENT_KINDS = ("action", "annotation", "condition-hint")


@dataclass(frozen=True)
class DemoToken:
    t: float
    text: str

    def __post_init__(self) -> None:
        if self.t < 0:
            raise DomainError("token timestamp must be >= 0")
        if not self.text or any(ch.isspace() for ch in self.text):
            raise DomainError("token text must be a single non-empty word")


@dataclass(frozen=True)
class DemoEvent:
    """Timestamped demonstration event.

    payload keys by kind:
      action         -> verb, actor, object
      annotation     -> x, y
      condition-hint -> expr (canonical DSL condition text), value (bool)
    """

    t: float
    kind: str
    payload: dict

    def __post_init__(self) -> None:
        if self.t < 0:
            raise DomainError("event timestamp must be >= 0")
        if self.kind not in EVENT_KINDS:
            raise DomainError(f"unknown event kind {self.kind!r}")


@dataclass(frozen=True)
class DemonstrationTrace:
    id: str
    scenario_id: str
    tokens: tuple[DemoToken, ...]
    events: tuple[DemoEvent, ...]
    snapshots: tuple[WorldState, ...] = ()

    def __post_init__(self) -> None:
        ts = [t.t for t in self.tokens]
        if ts != sorted(ts):
            raise DomainError("tokens must be sorted by timestamp")
        es = [e.t for e in self.events]
        if es != sorted(es):
            raise DomainError("events must be sorted by timestamp")
        ks = [s.tick for s in self.snapshots]
        if ks != sorted(ks):
            raise DomainError("snapshots must be sorted by tick")


def snapshot_interval_resample(trace: DemonstrationTrace, hz: float) -> DemonstrationTrace:
    """Pick snapshots nearest to a uniform hz grid; tokens/events untouched."""
    if hz <= 0:
        raise DomainError("resample rate must be positive")
    if not trace.snapshots:
        raise DomainError("nothing to resample")
    times = [s.tick * TICK_SECONDS for s in trace.snapshots]
    t0, t_last = times[0], times[-1]
    period = 1.0 / hz
    picked: list[WorldState] = []
    k = 0
    while True:
        target = t0 + k * period
        if target > t_last + 1e-9:
            break
        # nearest snapshot; ties resolve to the earlier one
        best = min(range(len(times)), key=lambda i: (abs(times[i] - target), i))
        picked.append(trace.snapshots[best])
        k += 1
    return replace(trace, snapshots=tuple(picked))


# ---------------------------------------------------------------------------
# execution traces


@dataclass(frozen=True)
class ActionRecord:
    tick: int
    actor: str
    name: str
    args: tuple
    status: str  # completed | interrupted | blocked | unfinished


@dataclass(frozen=True)
class SpeakRecord:
    tick: int
    text: str
    line: int  # source line of the Speak statement


@dataclass(frozen=True)
class ExecutionTrace:
    id: str
    program_id: str
    scenario_id: str
    seed: int
    states: tuple[WorldState, ...]
    actions: tuple[ActionRecord, ...]
    speaks: tuple[SpeakRecord, ...]
    termination: dict  # {"reason": completed|max-ticks|deadlock|aborted, ...}

    def __post_init__(self) -> None:
        ticks = [a.tick for a in self.actions]
        if ticks != sorted(ticks):
            raise DomainError("action records must be ordered by tick")
        ticks = [s.tick for s in self.speaks]
        if ticks != sorted(ticks):
            raise DomainError("speak records must be ordered by tick")


# ---------------------------------------------------------------------------
# JSON codecs (field order below is the schema order)


def goal_to_dict(g: GoalRegion) -> dict:
    return {"id": g.id, "team": g.team, "x_min": g.x_min, "x_max": g.x_max,
            "y_min": g.y_min, "y_max": g.y_max}


def goal_from_dict(d: dict) -> GoalRegion:
    return GoalRegion(d["id"], d["team"], d["x_min"], d["x_max"], d["y_min"], d["y_max"])


def workspace_to_dict(ws: Workspace) -> dict:
    return {
        "x_min": ws.x_min, "x_max": ws.x_max, "y_min": ws.y_min, "y_max": ws.y_max,
        "cols": ws.cols, "rows": ws.rows,
        "goals": [goal_to_dict(g) for g in ws.goals],
    }


def workspace_from_dict(d: dict) -> Workspace:
    return Workspace(
        d["x_min"], d["x_max"], d["y_min"], d["y_max"], d["cols"], d["rows"],
        tuple(goal_from_dict(g) for g in d.get("goals", ())),
    )


def entity_to_dict(e: Entity) -> dict:
    return {"id": e.id, "role": e.role, "team": e.team, "radius": e.radius}


def entity_from_dict(d: dict) -> Entity:
    return Entity(d["id"], d["role"], d.get("team", ""), d.get("radius", 0.4))


def world_to_dict(w: WorldState) -> dict:
    return {
        "tick": w.tick,
        "positions": {k: list(v) for k, v in w.positions.items()},
        "orientations": dict(w.orientations),
        "speeds": dict(w.speeds),
        "possession": w.possession,
        "ball_target": list(w.ball_target) if w.ball_target is not None else None,
    }


def world_from_dict(d: dict) -> WorldState:
    return WorldState(
        tick=d["tick"],
        positions={k: (v[0], v[1]) for k, v in d["positions"].items()},
        orientations=dict(d["orientations"]),
        speeds=dict(d["speeds"]),
        possession=d.get("possession"),
        ball_target=tuple(d["ball_target"]) if d.get("ball_target") is not None else None,
    )


def token_to_dict(t: DemoToken) -> dict:
    return {"t": t.t, "text": t.text}


def event_to_dict(e: DemoEvent) -> dict:
    return {"t": e.t, "kind": e.kind, "payload": dict(e.payload)}


def demo_to_dict(tr: DemonstrationTrace) -> dict:
    return {
        "id": tr.id,
        "scenario_id": tr.scenario_id,
        "tokens": [token_to_dict(t) for t in tr.tokens],
        "events": [event_to_dict(e) for e in tr.events],
        "snapshots": [world_to_dict(s) for s in tr.snapshots],
    }


def demo_from_dict(d: dict) -> DemonstrationTrace:
    return DemonstrationTrace(
        id=d["id"],
        scenario_id=d["scenario_id"],
        tokens=tuple(DemoToken(t["t"], t["text"]) for t in d["tokens"]),
        events=tuple(DemoEvent(e["t"], e["kind"], dict(e["payload"])) for e in d["events"]),
        snapshots=tuple(world_from_dict(s) for s in d.get("snapshots", ())),
    )


def action_to_dict(a: ActionRecord) -> dict:
    return {"tick": a.tick, "actor": a.actor, "name": a.name,
            "args": _jsonify_args(a.args), "status": a.status}


def speak_to_dict(s: SpeakRecord) -> dict:
    return {"tick": s.tick, "text": s.text, "line": s.line}


def trace_to_dict(tr: ExecutionTrace) -> dict:
    return {
        "id": tr.id,
        "program_id": tr.program_id,
        "scenario_id": tr.scenario_id,
        "seed": tr.seed,
        "states": [world_to_dict(s) for s in tr.states],
        "actions": [action_to_dict(a) for a in tr.actions],
        "speaks": [speak_to_dict(s) for s in tr.speaks],
        "termination": tr.termination,
    }


def trace_from_dict(d: dict) -> ExecutionTrace:
    return ExecutionTrace(
        id=d["id"],
        program_id=d["program_id"],
        scenario_id=d["scenario_id"],
        seed=d["seed"],
        states=tuple(world_from_dict(s) for s in d["states"]),
        actions=tuple(
            ActionRecord(a["tick"], a["actor"], a["name"], _unjsonify_args(a["args"]), a["status"])
            for a in d["actions"]
        ),
        speaks=tuple(SpeakRecord(s["tick"], s["text"], s["line"]) for s in d["speaks"]),
        termination=dict(d["termination"]),
    )


def _jsonify_args(args: tuple) -> list:
    out = []
    for a in args:
        out.append(list(a) if isinstance(a, tuple) else a)
    return out


def _unjsonify_args(args: list) -> tuple:
    out = []
    for a in args:
        out.append(tuple(a) if isinstance(a, list) else a)
    return tuple(out)


def dumps(data: dict) -> str:
    """Canonical JSON text used for every file this package writes."""
    return json.dumps(data, indent=2, ensure_ascii=False) + "\n"


def dumps_compact(data: dict) -> str:
    """One-line JSON used for newline-delimited streams."""
    return json.dumps(data, separators=(",", ":"), ensure_ascii=False)
