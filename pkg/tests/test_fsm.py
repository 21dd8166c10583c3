import random
import zlib

import pytest

from tacticforge.dsl import parse
from tacticforge.fixtures import manufacturing_world, program_text
from tacticforge.fsm import (
    compile_program, detect_deadlock, fsm_stats, initial_cursor,
    speak_freeze_ticks, step,
)
from tacticforge.registry import ApiRegistry, ApiSig, manufacturing_registry, soccer_registry
from tacticforge.scripted import ScriptedWorld, run_scripted

from oracle_interp import TreeInterp, fsm_stream

SOCCER = soccer_registry()
MFG = manufacturing_registry()


def toy_registry() -> ApiRegistry:
    sigs = [ApiSig(n, "action", (), f"{n}: toy action.") for n in ("Alpha", "Beta", "Gamma")]
    sigs += [ApiSig(n, "constraint", (), f"{n}: toy predicate.") for n in ("P", "Q", "R")]
    return ApiRegistry(
        "toy",
        actions={s.name: s for s in sigs if s.kind == "action"},
        constraints={s.name: s for s in sigs if s.kind == "constraint"},
    )


TOY = toy_registry()


def toy_world(seed: int, truth_rate: float = 0.4) -> ScriptedWorld:
    def leaf_fn(leaf: str, tick: int) -> bool:
        h = zlib.crc32(f"{seed}|{leaf}|{tick}".encode())
        return (h % 1000) / 1000.0 < truth_rate

    def duration_fn(action: str, start: int) -> int:
        return 1 + zlib.crc32(f"{seed}|dur|{action}|{start}".encode()) % 6

    return ScriptedWorld(leaf_fn, duration_fn)


class TestCompile:
    def test_single_action_two_states(self):
        prog = parse("behavior B():\n    do MoveTo((1.0, 1.0))\n", SOCCER)
        fsm = compile_program(prog, SOCCER)
        stats = fsm_stats(fsm)
        assert stats["states"] == 2
        assert stats["action_states"] == 1 and stats["terminal_states"] == 1

    def test_unsatisfiable_wait_fixture(self):
        prog = parse("behavior B():\n    while True:\n        do Wait() until not True\n",
                     SOCCER)
        fsm = compile_program(prog, SOCCER)
        waits = [s for s in fsm.states.values() if s.label == "wait"]
        assert len(waits) == 1
        guards = [e.guard_text() for e in fsm.out_edges(waits[0].id)]
        assert guards == ["not(true)"]

    def test_lure_branch_state_has_two_guard_edges(self):
        prog = parse(program_text("lure"), SOCCER)
        fsm = compile_program(prog, SOCCER)
        branches = [s for s in fsm.states.values() if s.label.startswith("branch")]
        assert len(branches) == 1
        edges = fsm.out_edges(branches[0].id)
        assert len(edges) == 2
        assert edges[0].guard_text() == "distanceto(opponent,self,<,4.000)"
        assert edges[1].guard_text() == "true"

    def test_speaks_ride_edges(self):
        prog = parse(program_text("lure"), SOCCER)
        fsm = compile_program(prog, SOCCER)
        assert fsm.entry_speaks and "Lure the opponent" in fsm.entry_speaks[0][0]
        with_speaks = [e for e in fsm.edges if e.speaks]
        assert len(with_speaks) == 2  # one per branch

    def test_while_back_edge(self):
        prog = parse(program_text("manufacturing"), MFG)
        fsm = compile_program(prog, MFG)
        heads = [s for s in fsm.states.values() if s.label.startswith("branch")]
        back = [e for e in fsm.edges
                if fsm.states[e.dst].label.startswith("branch")
                and fsm.states[e.src].kind == "action"]
        assert heads and back  # the loop closes back onto a branch head


class TestStepSemantics:
    def run_toy(self, src, world, max_ticks=60, window=10**9):
        prog = parse(src, TOY)
        return run_scripted(prog, TOY, world, max_ticks, deadlock_window=window)

    def test_interrupt_fires_mid_action_same_tick(self):
        # Alpha runs 30 ticks, interrupt P turns true at tick 5
        world = ScriptedWorld(
            leaf_fn=lambda leaf, tick: leaf == "p()" and tick >= 5,
            duration_fn=lambda a, s: 30,
        )
        run = self.run_toy(
            "behavior B():\n    do Alpha() until P()\n    do Beta()\n", world)
        alpha = run.trace.actions[0]
        assert alpha.status == "interrupted"
        beta = run.trace.actions[1]
        assert beta.tick == 5  # successor starts on the interrupt tick
        assert run.commands[4] == "Alpha" and run.commands[5] == "Beta"

    def test_interrupt_beats_completion(self):
        world = ScriptedWorld(
            leaf_fn=lambda leaf, tick: leaf == "p()" and tick >= 3,
            duration_fn=lambda a, s: 3,
        )
        run = self.run_toy("behavior B():\n    do Alpha() until P()\n", world)
        assert run.trace.actions[0].status == "interrupted"

    def test_first_true_edge_wins(self):
        world = ScriptedWorld(leaf_fn=lambda leaf, tick: True,
                              duration_fn=lambda a, s: 1)
        run = self.run_toy(
            "behavior B():\n"
            "    if P():\n        do Alpha()\n"
            "    elif Q():\n        do Beta()\n", world)
        names = [a.name for a in run.trace.actions]
        assert names == ["Alpha"]

    def test_terminal_idles(self):
        prog = parse("behavior B():\n    terminate\n", TOY)
        fsm = compile_program(prog, TOY)
        cursor = initial_cursor(fsm)
        res = step(fsm, cursor, lambda e: False, False, 0)
        assert res.reached_terminal
        res2 = step(fsm, res.cursor, lambda e: False, False, 1)
        assert res2.command is None and res2.reached_terminal

    def test_speak_freeze_duration(self):
        assert speak_freeze_ticks("one two three") == 1
        assert speak_freeze_ticks("one two three four") == 2
        world = ScriptedWorld(leaf_fn=lambda l, t: False, duration_fn=lambda a, s: 2)
        run = self.run_toy(
            'behavior B():\n    do Speak("hello there friend again")\n    do Alpha()\n',
            world)
        assert run.trace.speaks[0].tick == 0
        assert run.commands[0] == "idle" and run.commands[1] == "idle"
        assert run.commands[2] == "Alpha"

    def test_speak_emits_once_per_traversal(self):
        world = ScriptedWorld(leaf_fn=lambda l, t: True, duration_fn=lambda a, s: 1)
        run = self.run_toy(
            'behavior B():\n    while P():\n        do Speak("go")\n        do Alpha()\n',
            world, max_ticks=20)
        speak_ticks = [s.tick for s in run.trace.speaks]
        assert len(speak_ticks) == len(set(speak_ticks))
        assert len(speak_ticks) > 1  # loop re-entry re-emits


class TestDeadlock:
    def test_report_names_guard(self):
        world = ScriptedWorld(leaf_fn=lambda l, t: False, duration_fn=lambda a, s: 1)
        prog = parse("behavior B():\n    do Wait() until P()\n", TOY)
        run = run_scripted(prog, TOY, world, 300, deadlock_window=50)
        assert run.trace.termination["reason"] == "deadlock"
        report = run.trace.termination["report"]
        assert report["edges"][0]["guard"] == "p()"
        assert report["edges"][0]["leaves"] == [{"leaf": "p()", "value": False}]
        # waiting starts at tick 1 (decision rest at 0), so W=50 -> tick 50
        assert run.trace.termination["tick"] <= 51

    def test_guard_true_at_last_moment_no_report(self):
        world = ScriptedWorld(leaf_fn=lambda l, t: t >= 49, duration_fn=lambda a, s: 1)
        prog = parse("behavior B():\n    do Wait() until P()\n    do Alpha()\n", TOY)
        run = run_scripted(prog, TOY, world, 300, deadlock_window=50)
        assert run.trace.termination["reason"] == "completed"

    def test_long_action_is_not_deadlock(self):
        world = ScriptedWorld(leaf_fn=lambda l, t: False, duration_fn=lambda a, s: 200)
        prog = parse("behavior B():\n    do Alpha()\n", TOY)
        run = run_scripted(prog, TOY, world, 150, deadlock_window=50)
        assert run.trace.termination["reason"] == "max-ticks"

    def test_window_validation(self):
        prog = parse("behavior B():\n    do Alpha()\n", TOY)
        fsm = compile_program(prog, TOY)
        with pytest.raises(ValueError):
            detect_deadlock(fsm, initial_cursor(fsm), lambda e: False, 0, 0)


class TestManufacturingRun:
    def test_five_speaks_in_order_then_idle(self):
        prog = parse(program_text("manufacturing"), MFG)
        run = run_scripted(prog, MFG, manufacturing_world(), 300)
        texts = [s.text for s in run.trace.speaks]
        assert texts == [
            "the worker's bucket is running low on assembly parts. Fetch another bucket from the supply station",
            "pick up another bucket full of parts",
            "Return to the worker's station.",
            "Wait until the worker permits the bucket swap.",
            "The worker gave permission. Swap the bucket.",
        ]
        names = [a.name for a in run.trace.actions if a.status == "completed"]
        assert names == ["goTo", "pick", "goTo", "swapBuckets"]
        assert run.trace.termination["reason"] == "max-ticks"  # while True never exits


# ---------------------------------------------------------------------------
# random program generation for the oracle equivalence property


def gen_cond(rng, depth=0):
    from tacticforge.constraints import And, Call, Not, Or, TrueExpr
    roll = rng.random()
    if depth >= 2 or roll < 0.55:
        if roll < 0.08:
            return TrueExpr()
        return Call(rng.choice(["P", "Q", "R"]), ())
    if roll < 0.70:
        return And(gen_cond(rng, depth + 1), gen_cond(rng, depth + 1))
    if roll < 0.85:
        return Or(gen_cond(rng, depth + 1), gen_cond(rng, depth + 1))
    return Not(gen_cond(rng, depth + 1))


def gen_block(rng, depth):
    from tacticforge.constraints import Call, TrueExpr
    from tacticforge.dsl import (
        DoAction, DoWaitUntil, If, SpeakStmt, Terminate, While,
    )
    n = rng.randint(1, 3 if depth else 4)
    out = []
    for _ in range(n):
        roll = rng.random()
        if depth >= 2:
            roll = min(roll, 0.59)  # leaf statements only
        if roll < 0.35:
            until = gen_cond(rng) if rng.random() < 0.4 else None
            out.append(DoAction(Call(rng.choice(["Alpha", "Beta", "Gamma"]), ()), until))
        elif roll < 0.50:
            out.append(SpeakStmt(" ".join(rng.choices(
                ["go", "wide", "now", "hold", "press", "cover"],
                k=rng.randint(1, 5)))))
        elif roll < 0.60:
            out.append(DoWaitUntil(gen_cond(rng)))
        elif roll < 0.80:
            branches = tuple(
                (gen_cond(rng), gen_block(rng, depth + 1))
                for _ in range(rng.randint(1, 2))
            )
            orelse = gen_block(rng, depth + 1) if rng.random() < 0.5 else None
            out.append(If(branches, orelse))
        elif roll < 0.95:
            cond = TrueExpr() if rng.random() < 0.2 else gen_cond(rng)
            out.append(While(cond, gen_block(rng, depth + 1)))
        else:
            out.append(Terminate())
            break
    return tuple(out)


def gen_program(seed: int):
    from tacticforge.dsl import Behavior, BehaviorProgram
    rng = random.Random(seed)
    return BehaviorProgram(
        (Behavior("Fuzz", (), gen_block(rng, 0)),), entry="Fuzz")


class TestOracleEquivalence:
    @pytest.mark.parametrize("seed", range(20))
    def test_sample_of_random_programs(self, seed):
        prog = gen_program(seed)
        world = toy_world(seed * 31 + 7)
        run = run_scripted(prog, TOY, world, 100, deadlock_window=10**9)
        tree = TreeInterp(prog, world, 100).run()
        assert fsm_stream(run) == tree, f"divergence for seed {seed}"

    def test_round_trip_through_printer(self):
        from tacticforge.dsl import parse, print_program
        for seed in range(10):
            prog = gen_program(seed)
            text = print_program(prog)
            assert parse(text, TOY) == prog


def test_registry_json_round_trip():
    from tacticforge.registry import registry_from_dict, registry_to_dict
    d = registry_to_dict(SOCCER)
    again = registry_from_dict(d)
    assert registry_to_dict(again) == d


def test_step_debug_log_line():
    world = ScriptedWorld(leaf_fn=lambda l, t: False, duration_fn=lambda a, s: 2)
    prog = parse("behavior B():\n    do Alpha()\n", TOY)
    fsm = compile_program(prog, TOY)
    cursor = initial_cursor(fsm)
    res = step(fsm, cursor, lambda e: False, False, 0)
    line = res.log_line(0)
    assert line == "0|s0|acting|Alpha|-"
