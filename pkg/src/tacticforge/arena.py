"""2D kinematic arena: scripted agents, action execution, and narrated runs.

Motion is straight-line constant-speed integration at a fixed dt. The ball
sticks to its holder, flies to a fixed target when kicked, and transfers on
arrival to the nearest player within the catch radius (loose otherwise).

All kinematic constants live in this one config block:
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .constraints import Call, EvalContext, SampleExpr, eval_bool
from .constraints import field as cond_field
from .core import (
    ActionRecord, DemoEvent, DemonstrationTrace, DemoToken, DomainError, Entity,
    ExecutionTrace, SpeakRecord, TICK_SECONDS, WorldState, Workspace,
    check_entities, normalize_angle, validate_world,
)
from .fields import normalize, sample
from .fsm import (
    DEADLOCK_WINDOW, Fsm, compile_program, detect_deadlock, initial_cursor, step,
)
from .registry import ApiRegistry, builtin_registry

DT = TICK_SECONDS          # 0.1 s per tick
PLAYER_SPEED = 4.0         # m/s
PASS_SPEED = 12.0          # m/s
SHOT_SPEED = 16.0          # m/s
ARRIVE_EPS = 0.3           # m, MoveTo arrival tolerance
CATCH_RADIUS = 0.8         # m, ball reception radius
DEFAULT_LANE_WIDTH = 2.0   # m, shot-lane width check at kick time
EDGE_MARGIN = 0.2          # m, scripted targets are clamped this far inside


class ArenaError(RuntimeError):
    pass


@dataclass(frozen=True)
class AgentScript:
    """Scripted environment agent: waypoints plus one reactive rule.

    rule: hold (waypoints, then stay) | chase (pursue the ball holder while
    within trigger_radius) | mark (shadow mark_target at mark_offset).
    """

    entity: str
    rule: str = "hold"
    waypoints: tuple = ()
    speed: float = PLAYER_SPEED
    trigger_radius: float = 0.0
    mark_target: str = ""
    mark_offset: tuple = (0.0, 0.0)

    def __post_init__(self) -> None:
        if self.rule not in ("hold", "chase", "mark"):
            raise DomainError(f"unknown agent rule {self.rule!r}")
        if self.rule == "chase" and self.trigger_radius <= 0:
            raise DomainError("chase rule needs a positive trigger radius")


@dataclass(frozen=True)
class Scenario:
    id: str  # lure | overlap | distribute | custom
    workspace: Workspace
    entities: tuple[Entity, ...]
    initial: WorldState
    scripts: tuple[AgentScript, ...] = ()
    registry_id: str = "soccer"

    def __post_init__(self) -> None:
        check_entities(list(self.entities))
        ids = {e.id for e in self.entities}
        for s in self.scripts:
            if s.entity not in ids:
                raise DomainError(f"script references unknown entity {s.entity!r}")
            if s.mark_target and s.mark_target not in ids:
                raise DomainError(f"script marks unknown entity {s.mark_target!r}")
            for wp in s.waypoints:
                if not self.workspace.contains(*wp):
                    raise DomainError(f"waypoint {wp} outside workspace")
        problems = validate_world(self.initial, self.workspace, list(self.entities))
        if problems:
            raise DomainError("invalid initial state: " + "; ".join(problems))

    def entity_map(self) -> dict[str, Entity]:
        return {e.id: e for e in self.entities}

    def avatar_id(self) -> str:
        return next(e.id for e in self.entities if e.role == "avatar")

    def ball_id(self) -> str:
        return next(e.id for e in self.entities if e.role == "ball")


# ---------------------------------------------------------------------------
# world mechanics shared by run() and record_demo()


class _Sim:
    def __init__(self, scenario: Scenario, registry: ApiRegistry):
        self.scenario = scenario
        self.registry = registry
        self.world = scenario.initial
        self.entities = scenario.entity_map()
        self.avatar = scenario.avatar_id()
        self.ball = scenario.ball_id()
        self.waypoint_idx = {s.entity: 0 for s in scenario.scripts}
        self.flight: dict | None = None  # {target, speed, receiver, kicker}
        self.ball_landed = False         # set on the tick a flight ends

    def ctx(self) -> EvalContext:
        return EvalContext(self.scenario.workspace, self.entities, self.world)

    def _clamp(self, p: tuple) -> tuple:
        ws = self.scenario.workspace
        return (
            min(max(p[0], ws.x_min + EDGE_MARGIN), ws.x_max - EDGE_MARGIN),
            min(max(p[1], ws.y_min + EDGE_MARGIN), ws.y_max - EDGE_MARGIN),
        )

    def _script_target(self, script: AgentScript) -> tuple | None:
        pos = self.world.positions[script.entity]
        if script.rule == "chase" and self.world.possession:
            holder = self.world.possession
            if holder != script.entity:
                hp = self.world.positions[holder]
                if math.hypot(hp[0] - pos[0], hp[1] - pos[1]) <= script.trigger_radius:
                    return self._clamp(hp)
        if script.rule == "mark":
            tp = self.world.positions[script.mark_target]
            return self._clamp((tp[0] + script.mark_offset[0], tp[1] + script.mark_offset[1]))
        idx = self.waypoint_idx[script.entity]
        while idx < len(script.waypoints):
            wp = script.waypoints[idx]
            if math.hypot(wp[0] - pos[0], wp[1] - pos[1]) <= ARRIVE_EPS:
                idx += 1
                self.waypoint_idx[script.entity] = idx
                continue
            return wp
        return None

    @staticmethod
    def _step_toward(pos: tuple, target: tuple, speed: float) -> tuple:
        dx, dy = target[0] - pos[0], target[1] - pos[1]
        dist = math.hypot(dx, dy)
        reach = speed * DT
        if dist <= reach or dist < 1e-12:
            return target
        return (pos[0] + dx / dist * reach, pos[1] + dy / dist * reach)

    def advance(self, tick: int, avatar_target: tuple | None,
                avatar_speed: float = PLAYER_SPEED) -> None:
        """One tick of world motion: scripted agents, avatar, then the ball."""
        positions = dict(self.world.positions)
        orientations = dict(self.world.orientations)
        speeds = dict(self.world.speeds)

        moves: list[tuple[str, tuple, float]] = []
        if avatar_target is not None:
            moves.append((self.avatar, avatar_target, avatar_speed))
        for script in self.scenario.scripts:
            target = self._script_target(script)
            if target is not None:
                moves.append((script.entity, target, script.speed))
        for eid, target, speed in moves:
            old = positions[eid]
            new = self._step_toward(old, target, speed)
            positions[eid] = new
            if new != old:
                orientations[eid] = normalize_angle(math.atan2(new[1] - old[1], new[0] - old[0]))
                speeds[eid] = math.hypot(new[0] - old[0], new[1] - old[1]) / DT
            else:
                speeds[eid] = 0.0

        possession = self.world.possession
        ball_target = self.world.ball_target
        self.ball_landed = False
        if possession is not None:
            positions[self.ball] = positions[possession]
            speeds[self.ball] = speeds[possession]
        elif self.flight is not None:
            fl = self.flight
            new = self._step_toward(positions[self.ball], fl["target"], fl["speed"])
            positions[self.ball] = new
            speeds[self.ball] = fl["speed"]
            if new == fl["target"]:
                self.ball_landed = True
                ball_target = None
                possession = self._catcher(positions, fl)
                self.flight = None
                speeds[self.ball] = 0.0
        else:
            # loose ball: nearest player within catch radius picks it up
            possession = self._pickup(positions)

        self.world = WorldState(
            tick=tick,
            positions=positions,
            orientations=orientations,
            speeds=speeds,
            possession=possession,
            ball_target=ball_target,
        )

    def freeze_tick(self, tick: int) -> None:
        """Speak caption tick: time passes, nothing moves."""
        self.world = replace(self.world, tick=tick)

    def _catcher(self, positions: dict, flight: dict) -> str | None:
        bx, by = positions[self.ball]
        receiver = flight.get("receiver")
        if receiver:
            rx, ry = positions[receiver]
            if math.hypot(rx - bx, ry - by) <= CATCH_RADIUS:
                return receiver
        return self._pickup(positions)

    def _pickup(self, positions: dict) -> str | None:
        bx, by = positions[self.ball]
        best, best_d = None, CATCH_RADIUS
        for e in self.scenario.entities:
            if e.role == "ball":
                continue
            px, py = positions[e.id]
            d = math.hypot(px - bx, py - by)
            if d <= best_d:
                best, best_d = e.id, d
        return best

    def kick(self, kicker: str, target: tuple, speed: float,
             receiver: str | None) -> None:
        if self.world.possession != kicker:
            raise ArenaError(f"{kicker} cannot kick without possession")
        self.world = replace(self.world, possession=None, ball_target=target)
        self.flight = {"target": target, "speed": speed, "receiver": receiver,
                       "kicker": kicker}

    def lane_clear_to_point(self, src: str, point: tuple,
                            width: float = DEFAULT_LANE_WIDTH) -> bool:
        a = self.world.positions[src]
        team = self.entities[src].team
        for e in self.scenario.entities:
            if e.role == "ball" or e.id == src or e.team == team:
                continue
            if _seg_dist(self.world.positions[e.id], a, point) <= width / 2 + e.radius:
                return False
        return True


def _seg_dist(p, a, b) -> float:
    ax, ay = a
    bx, by = b
    px, py = p
    dx, dy = bx - ax, by - ay
    seg2 = dx * dx + dy * dy
    if seg2 <= 1e-12:
        return math.hypot(px - ax, py - ay)
    t = max(0.0, min(1.0, ((px - ax) * dx + (py - ay) * dy) / seg2))
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


# ---------------------------------------------------------------------------
# avatar action execution


class _ActionExec:
    """Tracks the active avatar action between fsm steps."""

    def __init__(self, sim: _Sim, rng: np.random.Generator):
        self.sim = sim
        self.rng = rng
        self.name: str | None = None
        self.target: tuple | None = None
        self.receiver: str | None = None
        self.result: str = "completed"
        self.resolved_args: tuple = ()
        self.start_tick: int = -1

    def start(self, call: Call, tick: int) -> None:
        sim = self.sim
        self.name = call.name
        self.start_tick = tick
        self.result = "completed"
        self.target = None
        self.receiver = None
        args = tuple(self._resolve(a) for a in call.args)
        self.resolved_args = args
        if call.name == "MoveTo":
            self.target = args[0]
        elif call.name == "Pass":
            self.receiver = args[0]
            if self.receiver not in sim.entities:
                raise ArenaError(f"pass receiver {self.receiver!r} unknown")
            if sim.world.possession == sim.avatar:
                sim.kick(sim.avatar, sim.world.positions[self.receiver],
                         PASS_SPEED, self.receiver)
            else:
                self.result = "blocked"
        elif call.name == "Shoot":
            goal = sim.scenario.workspace.goal_by_id(args[0])
            center = goal.center()
            self.target = center
            if sim.world.possession == sim.avatar:
                if not sim.lane_clear_to_point(sim.avatar, center):
                    self.result = "blocked"
                sim.kick(sim.avatar, center, SHOT_SPEED, None)
            else:
                self.result = "blocked"
        elif call.name == "TriggerTeammatePass":
            holder = sim.world.possession
            team = sim.entities[sim.avatar].team
            if (holder and holder != sim.avatar
                    and sim.entities[holder].team == team):
                sim.kick(holder, sim.world.positions[sim.avatar], PASS_SPEED,
                         sim.avatar)
            else:
                self.result = "blocked"
        else:
            raise ArenaError(f"unknown action {call.name!r}")

    def _resolve(self, arg):
        if isinstance(arg, SampleExpr):
            f = normalize(cond_field(arg.cond, self.sim.ctx()))
            return sample(f, self.rng)
        return arg

    def move_target(self) -> tuple | None:
        if self.name == "MoveTo":
            return self.target
        return None

    def completed(self) -> bool:
        sim = self.sim
        if self.name is None:
            return False
        if self.name == "MoveTo":
            x, y = sim.world.positions[sim.avatar]
            return math.hypot(x - self.target[0], y - self.target[1]) <= ARRIVE_EPS
        if self.name in ("Pass", "Shoot"):
            if self.result == "blocked" and sim.flight is None:
                return True
            return sim.flight is None and sim.world.ball_target is None
        if self.name == "TriggerTeammatePass":
            if sim.world.possession == sim.avatar:
                return True
            return sim.flight is None and self.result == "blocked"
        return True

    def final_status(self, fsm_status: str) -> str:
        if fsm_status == "completed" and self.result == "blocked":
            return "blocked"
        return fsm_status


# ---------------------------------------------------------------------------
# program runs


def run(program, scenario: Scenario, seed: int, max_ticks: int = 600,
        registry: ApiRegistry | None = None,
        deadlock_window: int = DEADLOCK_WINDOW,
        trace_id: str | None = None) -> ExecutionTrace:
    """Execute a behavior program as the avatar; deterministic per seed."""
    registry = registry or builtin_registry(scenario.registry_id)
    fsm: Fsm = compile_program(program, registry)
    rng = np.random.default_rng(seed)
    sim = _Sim(scenario, registry)
    execu = _ActionExec(sim, rng)
    cursor = initial_cursor(fsm)

    states: list[WorldState] = []
    actions: list[ActionRecord] = []
    speaks: list[SpeakRecord] = []
    open_action: ActionRecord | None = None
    termination: dict | None = None

    for tick in range(max_ticks):
        ctx = sim.ctx()
        evalc = lambda expr, _ctx=ctx: eval_bool(expr, _ctx)
        try:
            res = step(fsm, cursor, evalc, execu.completed(), tick)
            cursor = res.cursor
            for text, line in res.speaks:
                speaks.append(SpeakRecord(tick, text, line))
            if res.action_ended and open_action is not None:
                actions.append(replace(open_action,
                                       status=execu.final_status(res.action_ended)))
                open_action = None
            if res.action_started:
                execu.start(res.command, tick)
                open_action = ActionRecord(tick, sim.avatar, res.command.name,
                                           execu.resolved_args, "unfinished")
            if res.frozen:
                sim.freeze_tick(tick)
            else:
                avatar_target = execu.move_target() if cursor.sub == "acting" else None
                sim.advance(tick, avatar_target)
            states.append(sim.world)
            problems = validate_world(sim.world, scenario.workspace,
                                      list(scenario.entities))
            if problems:
                raise ArenaError("world invariant broken: " + "; ".join(problems))
            if res.reached_terminal:
                termination = {"reason": "completed", "tick": tick}
                break
            report = detect_deadlock(fsm, cursor, evalc, deadlock_window, tick)
            if report is not None:
                termination = {"reason": "deadlock", "tick": tick,
                               "report": report.to_dict()}
                break
        except ArenaError as err:
            termination = {"reason": "aborted", "tick": tick, "error": str(err)}
            break
    if termination is None:
        termination = {"reason": "max-ticks", "tick": max_ticks - 1}
    if open_action is not None:
        actions.append(open_action)
    return ExecutionTrace(
        id=trace_id or f"run-{scenario.id}-{seed}",
        program_id=program.entry,
        scenario_id=scenario.id,
        seed=seed,
        states=tuple(states),
        actions=tuple(actions),
        speaks=tuple(speaks),
        termination=termination,
    )


# ---------------------------------------------------------------------------
# synthetic demonstrations


@dataclass(frozen=True)
class DemoStep:
    """One scripted stand-in action: kind in moveto|trigger|pass|shoot|hold."""

    kind: str
    arg: object = None


def record_demo(scenario: Scenario, steps: list[DemoStep],
                tokens: list[tuple] = (), events: list[DemoEvent] = (),
                demo_id: str = "demo", max_ticks: int = 600) -> DemonstrationTrace:
    """Run a scripted avatar through the scenario and merge in narration.

    ``tokens`` are (seconds, word) pairs; ``events`` are extra annotation or
    condition-hint events. Action events are logged automatically at each
    step's start tick.
    """
    sim = _Sim(scenario, builtin_registry(scenario.registry_id))
    snapshots: list[WorldState] = [sim.world]
    action_events: list[DemoEvent] = []
    tick = 0

    def advance(avatar_target=None):
        nonlocal tick
        tick += 1
        if tick >= max_ticks:
            raise ArenaError("demo script exceeded max ticks")
        sim.advance(tick, avatar_target)
        snapshots.append(sim.world)

    for step_ in steps:
        t0 = tick * DT
        if step_.kind == "moveto":
            target = tuple(step_.arg)
            action_events.append(DemoEvent(t0, "action", {
                "verb": "MoveTo", "actor": "user", "object": ""}))
            while True:
                advance(avatar_target=target)
                x, y = sim.world.positions[sim.avatar]
                if math.hypot(x - target[0], y - target[1]) <= ARRIVE_EPS:
                    break
        elif step_.kind == "trigger":
            action_events.append(DemoEvent(t0, "action", {
                "verb": "TriggerTeammatePass", "actor": "user", "object": ""}))
            holder = sim.world.possession
            if holder and holder != sim.avatar:
                sim.kick(holder, sim.world.positions[sim.avatar], PASS_SPEED,
                         sim.avatar)
            while sim.world.possession != sim.avatar:
                advance()
                if sim.flight is None and sim.world.possession != sim.avatar:
                    break
        elif step_.kind == "pass":
            receiver = str(step_.arg)
            action_events.append(DemoEvent(t0, "action", {
                "verb": "Pass", "actor": "user", "object": receiver}))
            sim.kick(sim.avatar, sim.world.positions[receiver], PASS_SPEED, receiver)
            while sim.flight is not None:
                advance()
        elif step_.kind == "shoot":
            goal = scenario.workspace.goal_by_id(str(step_.arg))
            action_events.append(DemoEvent(t0, "action", {
                "verb": "Shoot", "actor": "user", "object": str(step_.arg)}))
            sim.kick(sim.avatar, goal.center(), SHOT_SPEED, None)
            while sim.flight is not None:
                advance()
        elif step_.kind == "hold":
            for _ in range(int(step_.arg)):
                advance()
        else:
            raise DomainError(f"unknown demo step kind {step_.kind!r}")

    run_len = tick * DT
    for t, _w in tokens:
        if t > run_len + 1e-9:
            raise DomainError(f"token timestamp {t} beyond run length {run_len:.1f}")
    for e in events:
        if e.t > run_len + 1e-9:
            raise DomainError(f"event timestamp {e.t} beyond run length {run_len:.1f}")

    all_events = sorted(action_events + list(events), key=lambda e: e.t)
    all_tokens = tuple(DemoToken(t, w) for t, w in sorted(tokens, key=lambda p: p[0]))
    return DemonstrationTrace(
        id=demo_id,
        scenario_id=scenario.id,
        tokens=all_tokens,
        events=tuple(all_events),
        snapshots=tuple(snapshots),
    )


# ---------------------------------------------------------------------------
# scenario JSON codec


def script_to_dict(s: AgentScript) -> dict:
    return {
        "entity": s.entity, "rule": s.rule,
        "waypoints": [list(w) for w in s.waypoints], "speed": s.speed,
        "trigger_radius": s.trigger_radius, "mark_target": s.mark_target,
        "mark_offset": list(s.mark_offset),
    }


def scenario_to_dict(sc: Scenario) -> dict:
    from .core import entity_to_dict, workspace_to_dict, world_to_dict
    return {
        "id": sc.id,
        "registry": sc.registry_id,
        "workspace": workspace_to_dict(sc.workspace),
        "entities": [entity_to_dict(e) for e in sc.entities],
        "initial": world_to_dict(sc.initial),
        "scripts": [script_to_dict(s) for s in sc.scripts],
    }


def scenario_from_dict(d: dict) -> Scenario:
    from .core import entity_from_dict, workspace_from_dict, world_from_dict
    return Scenario(
        id=d["id"],
        workspace=workspace_from_dict(d["workspace"]),
        entities=tuple(entity_from_dict(e) for e in d["entities"]),
        initial=world_from_dict(d["initial"]),
        scripts=tuple(
            AgentScript(
                entity=s["entity"], rule=s["rule"],
                waypoints=tuple(tuple(w) for w in s["waypoints"]),
                speed=s["speed"], trigger_radius=s["trigger_radius"],
                mark_target=s["mark_target"], mark_offset=tuple(s["mark_offset"]),
            )
            for s in d["scripts"]
        ),
        registry_id=d.get("registry", "soccer"),
    )
