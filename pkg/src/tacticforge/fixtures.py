"""Bundled drill scenarios, behavior programs, and demonstration scripts.

The three soccer drills (lure, overlap, distribute) are reconstructions of
the narrated coaching sessions described in their .tact files; the
manufacturing fixture retargets the same machinery to a non-soccer registry.
The pitch runs 30 m wide (x) by 20 m long (y); the avatar's team attacks the
north goal (increasing y), so the flanks are the x extremes.
"""
from __future__ import annotations

from importlib import resources

from .arena import AgentScript, DemoStep, Scenario, record_demo
from .core import DemoEvent, DemoToken, Entity, GoalRegion, WorldState, Workspace
from .scripted import ScriptedWorld

LANE_WIDTH = 2.0
LURE_FLANKS = ((4.0, 8.0), (26.0, 8.0))
PRESSURE_DISTANCE = 4.0


def program_text(name: str) -> str:
    """Source of a bundled .tact program: lure, overlap, distribute, manufacturing."""
    return resources.files("tacticforge").joinpath("data").joinpath(f"{name}.tact").read_text()


def pitch() -> Workspace:
    return Workspace(
        0.0, 30.0, 0.0, 20.0, cols=60, rows=40,
        goals=(
            GoalRegion("north_goal", "red", 12.0, 18.0, 19.5, 20.0),
            GoalRegion("south_goal", "blue", 12.0, 18.0, 0.0, 0.5),
        ),
    )


def _players(extra: tuple[Entity, ...] = ()) -> tuple[Entity, ...]:
    return (
        Entity("user", "avatar", "blue"),
        Entity("teammate", "teammate", "blue"),
        Entity("opponent", "opponent", "red"),
        Entity("ball", "ball", "", 0.15),
    ) + extra


def _world(positions: dict, possession: str | None) -> WorldState:
    return WorldState(
        tick=0,
        positions=dict(positions),
        orientations={k: 0.0 for k in positions},
        speeds={k: 0.0 for k in positions},
        possession=possession,
    )


def lure_scenario(variant: str = "chase") -> Scenario:
    """Teammate holds the ball deep; the defender starts on the avatar.

    variant "chase": the defender shadows the avatar wherever it is lured;
    variant "hold": the defender abandons the avatar and hunts the teammate.
    """
    if variant == "chase":
        script = AgentScript("opponent", rule="mark", mark_target="user",
                             mark_offset=(0.0, 1.5))
    elif variant == "hold":
        script = AgentScript("opponent", rule="mark", mark_target="teammate",
                             mark_offset=(0.0, 1.5))
    else:
        raise ValueError(f"unknown lure variant {variant!r}")
    positions = {
        "user": (15.0, 12.0), "teammate": (15.0, 4.0),
        "opponent": (15.0, 13.0), "ball": (15.0, 4.0),
    }
    return Scenario("lure", pitch(), _players(), _world(positions, "teammate"),
                    scripts=(script,))


def overlap_scenario() -> Scenario:
    """The avatar holds the ball while the teammate makes an overlapping run."""
    positions = {
        "user": (15.0, 10.0), "teammate": (13.0, 8.0),
        "opponent": (8.0, 16.0), "ball": (15.0, 10.0),
    }
    scripts = (
        AgentScript("teammate", rule="hold", waypoints=((18.0, 16.0),)),
        AgentScript("opponent", rule="hold"),
    )
    return Scenario("overlap", pitch(), _players(), _world(positions, "user"),
                    scripts=scripts)


def distribute_scenario() -> Scenario:
    """Two teammates wide, one lane shut by a defender: switch the play."""
    extra = (
        Entity("teammate2", "teammate", "blue"),
        Entity("opponent2", "opponent", "red"),
    )
    positions = {
        "user": (15.0, 6.0), "teammate": (7.0, 10.0), "teammate2": (23.0, 10.0),
        "opponent": (11.0, 8.0), "opponent2": (18.0, 16.0), "ball": (15.0, 6.0),
    }
    scripts = (
        AgentScript("opponent", rule="hold"),
        AgentScript("opponent2", rule="chase", trigger_radius=6.0),
    )
    return Scenario("distribute", pitch(), _players(extra),
                    _world(positions, "user"), scripts=scripts)


def interrupt_scenario() -> Scenario:
    """Defender sprints at the avatar: exercises mid-action interrupts."""
    positions = {
        "user": (4.0, 4.0), "teammate": (2.0, 2.0),
        "opponent": (26.0, 16.0), "ball": (2.0, 2.0),
    }
    scripts = (AgentScript("opponent", rule="chase", trigger_radius=100.0,
                           speed=6.0),)
    return Scenario("custom", pitch(), _players(), _world(positions, "user"),
                    scripts=scripts)


def manufacturing_world(low_until: int = 70, ready_from: int = 60) -> ScriptedWorld:
    """Scripted truth timeline for the restocking routine."""
    durations = {"goTo": 10, "pick": 5, "swapBuckets": 5}

    def leaf_fn(leaf: str, tick: int) -> bool:
        if leaf.startswith("belowthreshold("):
            return tick < low_until
        if leaf.startswith("humanready("):
            return tick >= ready_from
        raise KeyError(f"unscripted constraint {leaf!r}")

    def duration_fn(action: str, _start: int) -> int:
        return durations.get(action, 5)

    return ScriptedWorld(leaf_fn, duration_fn)


# ---------------------------------------------------------------------------
# synthetic lure demonstrations (the fallback synthesizer's teaching input)
#
# Built in two passes: the scripted run is recorded first, then narration is
# anchored to the actual action timestamps so token windows and condition
# hints line up exactly. Holds between steps keep the narration windows of
# neighbouring actions from overlapping.

_HINT_EXPR = f"DistanceTo(opponent, self, {PRESSURE_DISTANCE}, <)"


def _spread(words: str, start: float) -> list[tuple]:
    return [(round(start + 0.2 * i, 1), w) for i, w in enumerate(words.split())]


def _with_narration(demo, per_action_words: list[str], hint_value: bool,
                    flank: tuple):
    from dataclasses import replace as dc_replace
    acts = [e for e in demo.events if e.kind == "action"]
    assert len(acts) == len(per_action_words)
    tokens = []
    for event, words in zip(acts, per_action_words):
        tokens.extend(_spread(words, event.t))
    extra = [
        DemoEvent(acts[0].t + 0.2, "annotation", {"x": flank[0], "y": flank[1]}),
        DemoEvent(acts[-1].t, "condition-hint",
                  {"expr": _HINT_EXPR, "value": hint_value}),
    ]
    events = tuple(sorted(list(demo.events) + extra, key=lambda e: e.t))
    toks = tuple(DemoToken(t, w) for t, w in sorted(tokens))
    return dc_replace(demo, tokens=toks, events=events)


def _lure_demo_steps(flank: tuple, closing: DemoStep) -> list[DemoStep]:
    return [
        DemoStep("moveto", flank),
        DemoStep("hold", 40),
        DemoStep("trigger"),
        DemoStep("hold", 40),
        closing,
        DemoStep("hold", 10),
    ]


def lure_demo_pass(scenario: Scenario | None = None):
    """Demo 1: the defender follows, so give the ball back to the teammate."""
    sc = scenario or lure_scenario("chase")
    base = record_demo(sc, _lure_demo_steps(LURE_FLANKS[0], DemoStep("pass", "teammate")),
                       demo_id="lure-demo-pass")
    return _with_narration(base, [
        "lure the opponent out to the side like this",
        "then call for the pass from your teammate",
        "the defender came after me so pass back",
    ], hint_value=True, flank=LURE_FLANKS[0])


def lure_demo_shoot(scenario: Scenario | None = None):
    """Demo 2: the defender stays back, so take the shot."""
    sc = scenario or lure_scenario("hold")
    base = record_demo(sc, _lure_demo_steps(LURE_FLANKS[1], DemoStep("shoot", "north_goal")),
                       demo_id="lure-demo-shoot")
    return _with_narration(base, [
        "lure the opponent out to the side like this",
        "then call for the pass from your teammate",
        "the defender does not budge so shoot for goal",
    ], hint_value=False, flank=LURE_FLANKS[1])
