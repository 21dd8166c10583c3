"""Run compiled behaviors against a scripted boolean world.

This harness executes programs whose constraints are plain predicates (no
spatial fields): condition leaves resolve through a user-supplied truth
function of (canonical leaf string, tick), and each action takes a scripted
number of ticks. It is how non-soccer registries (e.g. the manufacturing
domain) execute, and it doubles as a deterministic test bench for the
state-machine semantics.
"""
from __future__ import annotations

from dataclasses import dataclass

from .constraints import And, Call, CondExpr, Not, Or, TrueExpr, canonical_string
from .core import ActionRecord, ExecutionTrace, SpeakRecord
from .dsl import BehaviorProgram
from .fsm import DEADLOCK_WINDOW, compile_program, detect_deadlock, initial_cursor, step
from .registry import ApiRegistry


@dataclass(frozen=True)
class ScriptedWorld:
    """leaf_fn(canonical_leaf, tick) -> bool; duration_fn(action, start) -> ticks."""

    leaf_fn: object
    duration_fn: object


def eval_scripted(expr: CondExpr, tick: int, world: ScriptedWorld) -> bool:
    if isinstance(expr, TrueExpr):
        return True
    if isinstance(expr, And):
        return eval_scripted(expr.left, tick, world) and eval_scripted(expr.right, tick, world)
    if isinstance(expr, Or):
        return eval_scripted(expr.left, tick, world) or eval_scripted(expr.right, tick, world)
    if isinstance(expr, Not):
        return not eval_scripted(expr.item, tick, world)
    if isinstance(expr, Call):
        return bool(world.leaf_fn(canonical_string(expr), tick))
    raise TypeError(f"cannot evaluate {expr!r}")


@dataclass(frozen=True)
class ScriptedRun:
    trace: ExecutionTrace
    commands: tuple[str, ...]  # per tick: action name or "idle"


def run_scripted(program: BehaviorProgram, registry: ApiRegistry,
                 world: ScriptedWorld, max_ticks: int,
                 deadlock_window: int = DEADLOCK_WINDOW,
                 trace_id: str = "scripted-run",
                 scenario_id: str = "scripted") -> ScriptedRun:
    fsm = compile_program(program, registry)
    cursor = initial_cursor(fsm)
    commands: list[str] = []
    actions: list[ActionRecord] = []
    speaks: list[SpeakRecord] = []
    open_action: dict | None = None
    termination: dict | None = None

    for tick in range(max_ticks):
        evalc = lambda expr, _t=tick: eval_scripted(expr, _t, world)
        completed = (
            open_action is not None
            and cursor.sub == "acting"
            and tick - open_action["start"] >= open_action["duration"]
        )
        res = step(fsm, cursor, evalc, completed, tick)
        cursor = res.cursor
        for text, line in res.speaks:
            speaks.append(SpeakRecord(tick, text, line))
        if res.action_ended and open_action is not None:
            actions.append(ActionRecord(open_action["start"], "avatar",
                                        open_action["name"], open_action["args"],
                                        res.action_ended))
            open_action = None
        if res.action_started:
            call = res.command
            open_action = {
                "start": tick,
                "name": call.name,
                "args": call.args,
                "duration": max(1, int(world.duration_fn(call.name, tick))),
            }
        commands.append(res.command.name if res.command else "idle")
        if res.reached_terminal:
            termination = {"reason": "completed", "tick": tick}
            break
        report = detect_deadlock(fsm, cursor, evalc, deadlock_window, tick)
        if report is not None:
            termination = {"reason": "deadlock", "tick": tick,
                           "report": report.to_dict()}
            break
    if termination is None:
        termination = {"reason": "max-ticks", "tick": max_ticks - 1}
    if open_action is not None:
        actions.append(ActionRecord(open_action["start"], "avatar",
                                    open_action["name"], open_action["args"],
                                    "unfinished"))
    trace = ExecutionTrace(
        id=trace_id,
        program_id=program.entry,
        scenario_id=scenario_id,
        seed=0,
        states=(),
        actions=tuple(sorted(actions, key=lambda a: a.tick)),
        speaks=tuple(speaks),
        termination=termination,
    )
    return ScriptedRun(trace, tuple(commands))
