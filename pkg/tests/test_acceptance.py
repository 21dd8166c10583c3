"""Acceptance gate: one test per release criterion, each at its stated
tolerance and time budget. The terminal summary prints one line per
criterion (see conftest)."""
import math
import time

import numpy as np
from scipy.stats import chisquare

from tacticforge.arena import run
from tacticforge.constraints import And, Call, EvalContext, Or, field
from tacticforge.core import dumps, trace_to_dict
from tacticforge.dsl import parse
from tacticforge.fields import (
    SpatialField, field_and, field_not, field_or, normalize, sample,
)
from tacticforge.fixtures import (
    lure_demo_pass, lure_demo_shoot, lure_scenario, manufacturing_world,
    program_text,
)
from tacticforge.flow import completeness, correctness, Rubric, RubricScore, \
    DecisionFlowGraph, FlowEdge, FlowNode, extract_flow
from tacticforge.fsm import compile_program
from tacticforge.grounding import ground, render
from tacticforge.registry import manufacturing_registry, soccer_registry
from tacticforge.scripted import run_scripted
from tacticforge.synthesis import (
    StubClient, demos_to_transcripts, fallback_synthesize, repair,
)

from oracle_interp import TreeInterp, fsm_stream
from test_fsm import TOY, gen_program, toy_world

SOCCER = soccer_registry()
MFG = manufacturing_registry()
TOL = 1e-12


def test_constraint_algebra_suite():
    """AND/OR commutativity+associativity, NOT involution, product<=min /
    sum>=max bounds, and normalize idempotence within 1e-12 over 1,000
    random 60x40 fields, in under 10 s."""
    ws = lure_scenario("chase").workspace
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    for _ in range(1000):
        a = SpatialField(ws, rng.random((ws.rows, ws.cols)))
        b = SpatialField(ws, rng.random((ws.rows, ws.cols)))
        c = SpatialField(ws, rng.random((ws.rows, ws.cols)))
        assert np.max(np.abs(field_and(a, b).values - field_and(b, a).values)) <= TOL
        assert np.max(np.abs(field_or(a, b).values - field_or(b, a).values)) <= TOL
        assert np.max(np.abs(
            field_and(field_and(a, b), c).values
            - field_and(a, field_and(b, c)).values)) <= TOL
        assert np.max(np.abs(
            field_or(field_or(a, b), c).values
            - field_or(a, field_or(b, c)).values)) <= TOL
        assert np.all(field_and(a, b).values <= np.minimum(a.values, b.values) + TOL)
        assert np.all(field_or(a, b).values >= np.maximum(a.values, b.values) - TOL)
        assert np.max(np.abs(field_not(field_not(a)).values - a.values)) <= TOL
        n1 = normalize(a)
        n2 = normalize(n1)
        assert np.max(np.abs(n1.values - n2.values)) <= TOL
    assert time.perf_counter() - start < 10.0


def _fig3_expr():
    lane = Call("PassingLane", ("teammate", "self", 2.0))
    left = Call("SideOf", ("self", "opponent", "horizontal", "left"))
    right = Call("SideOf", ("self", "opponent", "horizontal", "right"))
    return And(lane, Or(left, right))


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def _oracle_fig3_value(x, y, teammate, opponent, radius, w=2.0, edge=1.0,
                       lane_edge=0.5, lo=0.05, hi=0.95):
    """Pointwise evaluation of lane AND (left OR right), no arrays."""
    tx, ty = teammate
    ox, oy = opponent
    d_opp = math.hypot(ox - tx, oy - ty)
    half = math.atan((radius + w / 2.0) / d_opp)
    theta_opp = math.atan2(oy - ty, ox - tx)
    dist = math.hypot(x - tx, y - ty)
    theta = math.atan2(y - ty, x - tx)
    dtheta = abs(math.remainder(theta - theta_opp, 2.0 * math.pi))
    arc = (dtheta - half) * dist
    inside = _sigmoid(-arc / lane_edge) * _sigmoid((dist - d_opp) / lane_edge)
    lane = min(hi, hi - (hi - lo) * inside)
    left = _sigmoid((ox - x) / edge)
    right = _sigmoid((x - ox) / edge)
    return lane * (left + right)


def test_fig3_field_reconstruction():
    """Lane AND (left OR right) on the lure scenario: the two highest-mass
    cells sit on opposite flanks, occlusion-cone cells carry < 20% of the
    flank peak, and a brute-force pointwise oracle agrees to 1e-12; < 5 s."""
    start = time.perf_counter()
    sc = lure_scenario("chase")
    ctx = EvalContext(sc.workspace, sc.entity_map(), sc.initial)
    composed = normalize(field(_fig3_expr(), ctx))
    ws = sc.workspace

    # oracle: independent scalar evaluation over every cell
    teammate = sc.initial.positions["teammate"]
    opponent = sc.initial.positions["opponent"]
    radius = sc.entity_map()["opponent"].radius
    raw = np.empty((ws.rows, ws.cols))
    for r in range(ws.rows):
        for c in range(ws.cols):
            x, y = ws.cell_center(r, c)
            raw[r, c] = _oracle_fig3_value(x, y, teammate, opponent, radius)
    oracle = raw / raw.sum()
    assert np.max(np.abs(oracle - composed.values)) <= TOL

    order = np.argsort(composed.values.ravel())[::-1]
    (r1, c1), (r2, c2) = (divmod(int(i), ws.cols) for i in order[:2])
    xs = sorted(ws.cell_center(r, c)[0] for r, c in ((r1, c1), (r2, c2)))
    assert xs[0] < 15.0 - 7.5 and xs[1] > 15.0 + 7.5  # opposite flanks

    # occlusion-cone cells: clearly inside the shadow (away from both the
    # angular skirt and the opponent itself)
    flank_peak = float(composed.values[r1, c1])
    d_opp = math.hypot(opponent[0] - teammate[0], opponent[1] - teammate[1])
    half = math.atan((radius + 1.0) / d_opp)
    cone_cells = 0
    for r in range(ws.rows):
        for c in range(ws.cols):
            x, y = ws.cell_center(r, c)
            dist = math.hypot(x - teammate[0], y - teammate[1])
            theta = math.atan2(y - teammate[1], x - teammate[0])
            dtheta = abs(math.remainder(theta - math.pi / 2.0, 2.0 * math.pi))
            if dtheta <= 0.3 * half and dist >= d_opp + 2.0:
                cone_cells += 1
                assert composed.values[r, c] < 0.2 * flank_peak
    assert cone_cells >= 3
    assert time.perf_counter() - start < 5.0


def test_sampling_statistics():
    """40,000 draws from a 4-cell fixture pass chi-square at p > 0.001 and a
    fixed seed reproduces identical draws; < 5 s."""
    start = time.perf_counter()
    from tacticforge.core import Workspace
    ws = Workspace(0.0, 2.0, 0.0, 2.0, 2, 2)
    masses = np.array([[0.1, 0.2], [0.3, 0.4]])
    f = normalize(SpatialField(ws, masses))

    def draw(seed, n):
        rng = np.random.default_rng(seed)
        return [sample(f, rng) for _ in range(n)]

    n = 40_000
    points = draw(123, n)
    counts = np.zeros(4)
    for x, y in points:
        r, c = ws.cell_of(x, y)
        counts[r * 2 + c] += 1
    expected = masses.ravel() * n
    result = chisquare(counts, expected)
    assert result.pvalue > 0.001
    assert draw(77, 100) == draw(77, 100)  # seed-stable
    assert time.perf_counter() - start < 5.0


def test_fsm_ast_oracle_equivalence():
    """200 random programs x 100-tick random worlds: compiled-machine
    execution and the independent tree-walking interpreter emit identical
    (tick, action, speak) streams; < 60 s."""
    start = time.perf_counter()
    for seed in range(200):
        prog = gen_program(seed)
        world = toy_world(seed * 31 + 7)
        machine = fsm_stream(run_scripted(prog, TOY, world, 100,
                                          deadlock_window=10**9))
        tree = TreeInterp(prog, world, 100).run()
        assert machine == tree, f"divergence at seed {seed}"
    assert time.perf_counter() - start < 60.0


CHASE_SEEDS = (1, 2, 3)
HOLD_SEEDS = (4, 5, 6)


def test_running_example_end_to_end():
    """Lure program: chase seeds take the Pass branch, hold seeds take the
    Shoot branch, branch Speak lines are present and ordered, and traces are
    byte-stable; < 10 s."""
    start = time.perf_counter()
    prog = parse(program_text("lure"), SOCCER)
    for seed in CHASE_SEEDS:
        trace = run(prog, lure_scenario("chase"), seed=seed)
        assert trace.termination["reason"] == "completed"
        assert any(a.name == "Pass" for a in trace.actions)
        assert not any(a.name == "Shoot" for a in trace.actions)
        texts = [s.text for s in trace.speaks]
        assert texts[0].startswith("Lure the opponent")
        assert texts[1].startswith("The opponent came after you")
        pass_record = next(a for a in trace.actions if a.name == "Pass")
        branch_speak = next(s for s in trace.speaks
                            if "came after you" in s.text)
        assert branch_speak.tick <= pass_record.tick
    for seed in HOLD_SEEDS:
        trace = run(prog, lure_scenario("hold"), seed=seed)
        assert trace.termination["reason"] == "completed"
        assert any(a.name == "Shoot" for a in trace.actions)
        assert not any(a.name == "Pass" for a in trace.actions)
        texts = [s.text for s in trace.speaks]
        assert texts[0].startswith("Lure the opponent")
        assert texts[1].startswith("The opponent does not budge")
    again = run(prog, lure_scenario("chase"), seed=CHASE_SEEDS[0])
    first = run(prog, lure_scenario("chase"), seed=CHASE_SEEDS[0])
    assert dumps(trace_to_dict(first)) == dumps(trace_to_dict(again))
    assert time.perf_counter() - start < 10.0


def test_interrupt_semantics():
    """A termination condition firing mid-MoveTo transitions on the same
    tick, asserted from the trace."""
    from tacticforge.fixtures import interrupt_scenario
    sc = interrupt_scenario()
    prog = parse(
        "behavior B():\n"
        "    do MoveTo((28.0, 4.0)) until DistanceTo(opponent, self, 3.0, <)\n"
        "    do MoveTo((4.0, 16.0))\n"
        "    terminate\n",
        SOCCER)
    trace = run(prog, sc, seed=2, max_ticks=400)
    first, second = trace.actions[0], trace.actions[1]
    assert first.status == "interrupted"
    tick = second.tick
    before = trace.states[tick - 1].positions
    assert math.hypot(before["user"][0] - before["opponent"][0],
                      before["user"][1] - before["opponent"][1]) < 3.0
    at_exit = trace.states[tick - 1].positions["user"]
    assert math.hypot(at_exit[0] - 28.0, at_exit[1] - 4.0) > 1.0  # mid-flight


def test_deadlock_attribution():
    """An unsatisfiable guard (opponent static 10 m away, waiting for it to
    come within 1 m) terminates with a DeadlockReport naming the exact
    canonical guard within W+1 ticks of the wait starting."""
    from tacticforge.arena import Scenario
    from tacticforge.core import WorldState
    from tacticforge.fixtures import pitch, _players
    positions = {"user": (10.0, 10.0), "teammate": (5.0, 5.0),
                 "opponent": (20.0, 10.0), "ball": (5.0, 5.0)}
    sc = Scenario("custom", pitch(), _players(), WorldState(
        tick=0, positions=positions,
        orientations={k: 0.0 for k in positions},
        speeds={k: 0.0 for k in positions}, possession="teammate"))
    prog = parse(
        "behavior B():\n    do Wait() until DistanceTo(opponent, self, 1.0, <)\n",
        SOCCER)
    window = 50
    trace = run(prog, sc, seed=1, max_ticks=400, deadlock_window=window)
    assert trace.termination["reason"] == "deadlock"
    report = trace.termination["report"]
    assert report["edges"][0]["guard"] == "distanceto(opponent,self,<,1.000)"
    assert report["edges"][0]["leaves"] == [
        {"leaf": "distanceto(opponent,self,<,1.000)", "value": False}]
    waiting_from = report["since_tick"]
    assert trace.termination["tick"] - waiting_from <= window + 1


def test_metrics_exactness():
    """Correctness 7/8 -> 87.5 and completeness (2+1)/(3+2) -> 60.0 match
    hand arithmetic exactly; completeness(G, G) = 100 across the corpus."""
    rubric = Rubric(("a", "b", "c", "d"))
    assert correctness(RubricScore(rubric, (2, 2, 2, 1))) == 87.5

    def graph(nodes, edges):
        return DecisionFlowGraph(
            tuple(FlowNode(f"n{i}", lab) for i, lab in enumerate(nodes)),
            tuple(FlowEdge(f"n{nodes.index(s)}", f"n{nodes.index(d)}", g)
                  for s, d, g in edges),
        )

    gt = graph(["a", "b", "c"], [("a", "b", "g1"), ("b", "c", "g2")])
    sys_g = graph(["a", "b", "z"], [("a", "b", "g1"), ("b", "z", "g3")])
    assert completeness(sys_g, gt) == 60.0

    for name, reg in (("lure", SOCCER), ("overlap", SOCCER),
                      ("distribute", SOCCER), ("manufacturing", MFG)):
        g = extract_flow(compile_program(parse(program_text(name), reg), reg))
        assert completeness(g, g) == 100.0


GOLDEN_TRANSCRIPT = (
    "You should move to either side [user marked coordinate (4.0, 8.0)]")


def test_grounding_goldens():
    """Token/event merge renders the exact golden injection string and is
    byte-stable across repeated renders."""
    from tacticforge.core import DemoEvent, DemonstrationTrace, DemoToken
    tokens = tuple(DemoToken(round(i * 0.2, 3), w)
                   for i, w in enumerate("You should move to either side".split()))
    events = (DemoEvent(1.0, "annotation", {"x": 4.0, "y": 8.0}),)
    demo = DemonstrationTrace("g", "lure", tokens, events)
    out = render(ground(demo))
    assert out == GOLDEN_TRANSCRIPT
    assert render(ground(demo)) == out

    d1 = lure_demo_pass()
    text = render(ground(d1))
    assert "[user marked coordinate (4.0, 8.0)]" in text
    assert "[user passed to teammate]" in text
    assert render(ground(lure_demo_pass())) == text


GOLDEN_FALLBACK = """\
behavior LearnedBehavior():
    do Speak("lure the opponent out to the side like this")
    do MoveTo(Sample(NearPoint(self, (4.0, 8.0), 1.5) or NearPoint(self, (26.0, 8.0), 1.5)))
    do Speak("then call for the pass from your teammate")
    do TriggerTeammatePass()
    if DistanceTo(opponent, self, 4.0, <):
        do Speak("the defender came after me so pass back")
        do Pass(teammate)
    elif not DistanceTo(opponent, self, 4.0, <):
        do Speak("the defender does not budge so shoot for goal")
        do Shoot(north_goal)
    terminate
"""


def test_fallback_synthesis():
    """Two lure demos produce the golden branching AST whose flow scores
    100% completeness against the ground-truth graph; < 5 s."""
    start = time.perf_counter()
    program = fallback_synthesize([lure_demo_pass(), lure_demo_shoot()], SOCCER)
    golden = parse(GOLDEN_FALLBACK, SOCCER)
    assert program == golden
    sys_flow = extract_flow(compile_program(program, SOCCER))
    gt_flow = extract_flow(compile_program(golden, SOCCER))
    assert completeness(sys_flow, gt_flow) == 100.0
    assert time.perf_counter() - start < 5.0


def test_repair_loop_with_stub_client():
    """Flow feedback 'don't move to the goal' removes exactly that node
    (diff cardinality 1) and the repair prompt provably carries the original
    demonstration transcripts."""
    from tacticforge.grounding import FeedbackSession
    from tacticforge.synthesis import flow_feedback_text
    lure_text = program_text("lure")
    detour = lure_text.replace(
        '        do Speak("The opponent does not budge, so you can shoot for the goal.")\n',
        '        do Speak("The opponent does not budge, so you can shoot for the goal.")\n'
        '        do MoveTo((15.0, 18.0))\n')
    before = parse(detour, SOCCER)
    flow_before = extract_flow(compile_program(before, SOCCER))
    node = next(n for n in flow_before.nodes if n.label == "moveto((15.000,18.000))")
    session = FeedbackSession(
        kind="flow", node_ids=(node.id,),
        tokens=tuple(enumerate("you do not need to move to the goal "
                               "either make the shot or pass back".split())))
    feedback = flow_feedback_text(session, flow_before)
    demo_texts = [render(t) for t in
                  demos_to_transcripts([lure_demo_pass(), lure_demo_shoot()])]
    client = StubClient([lure_text])
    repaired, prov = repair(before, feedback, demo_texts, SOCCER, client)
    after_labels = {n.label for n in
                    extract_flow(compile_program(repaired, SOCCER)).nodes}
    assert "moveto((15.000,18.000))" not in after_labels
    assert prov["diff"]["cardinality"] == 1
    prompt = prov["attempts"][0]["prompt"]
    for demo_text in demo_texts:
        assert demo_text in prompt


def test_generalization_not_replay():
    """Across 20 seeds the sampled MoveTo destinations cover >= 2 distinct
    cells with a left/right flank split inside [20%, 80%]."""
    prog = parse(program_text("lure"), SOCCER)
    sc = lure_scenario("chase")
    cells = set()
    left = 0
    for seed in range(20):
        trace = run(prog, sc, seed=seed)
        move = next(a for a in trace.actions if a.name == "MoveTo")
        x, _y = move.args[0]
        cells.add(sc.workspace.cell_of(*move.args[0]))
        if x < 15.0:
            left += 1
    assert len(cells) >= 2
    assert 0.2 <= left / 20.0 <= 0.8


def test_cross_domain_retargeting():
    """The manufacturing program parses, compiles, and runs to the end of
    its budget on a boolean registry with its 5 Speak lines in order, with
    no soccer machinery loaded at all (verified in a fresh interpreter)."""
    prog = parse(program_text("manufacturing"), MFG)
    result = run_scripted(prog, MFG, manufacturing_world(), 300)
    texts = [s.text for s in result.trace.speaks]
    assert texts == [
        "the worker's bucket is running low on assembly parts. Fetch another bucket from the supply station",
        "pick up another bucket full of parts",
        "Return to the worker's station.",
        "Wait until the worker permits the bucket swap.",
        "The worker gave permission. Swap the bucket.",
    ]
    done = [a for a in result.trace.actions if a.status == "completed"]
    assert [a.name for a in done] == ["goTo", "pick", "goTo", "swapBuckets"]
    assert result.trace.termination["reason"] == "max-ticks"

    # the whole pipeline above must not touch the soccer arena
    import subprocess
    import sys as _sys
    probe = (
        "import sys\n"
        "from importlib import resources\n"
        "from tacticforge.dsl import parse\n"
        "from tacticforge.registry import manufacturing_registry\n"
        "from tacticforge.scripted import ScriptedWorld, run_scripted\n"
        "text = resources.files('tacticforge').joinpath('data')"
        ".joinpath('manufacturing.tact').read_text()\n"
        "world = ScriptedWorld(\n"
        "    lambda leaf, tick: tick < 70 if leaf.startswith('belowthreshold')"
        " else tick >= 60,\n"
        "    lambda action, start: {'goTo': 10, 'pick': 5}.get(action, 5))\n"
        "reg = manufacturing_registry()\n"
        "run_scripted(parse(text, reg), reg, world, 300)\n"
        "assert 'tacticforge.arena' not in sys.modules, 'soccer arena imported'\n"
        "print('clean')\n"
    )
    out = subprocess.run([_sys.executable, "-c", probe],
                         capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert out.stdout.strip() == "clean"
