"""The whole teaching loop, no model required.

Two narrated demonstrations of the lure drill are grounded into transcripts,
the deterministic fallback synthesizer merges them into one branching
program, the flow is scored against the expected structure, and a structured
edit then applies a user correction ("move further out") to the program.
"""
from tacticforge.dsl import print_program, walk_stmts, DoAction
from tacticforge.fixtures import lure_demo_pass, lure_demo_shoot
from tacticforge.flow import completeness, extract_flow
from tacticforge.fsm import compile_program
from tacticforge.grounding import ground, render
from tacticforge.registry import soccer_registry
from tacticforge.synthesis import EditOp, apply_structured_edit, fallback_synthesize

registry = soccer_registry()
demos = [lure_demo_pass(), lure_demo_shoot()]

print("--- grounded transcripts (model input) ---")
for demo in demos:
    print(f"[{demo.id}]")
    print(" ", render(ground(demo)))
print()

program = fallback_synthesize(demos, registry)
print("--- synthesized program ---")
print(print_program(program))

# The two demos share a prefix (lure, receive) and diverge on the defender's
# reaction; the synthesizer turned the divergence into hint-guarded branches.
flow = extract_flow(compile_program(program, registry))
self_score = completeness(flow, flow)
print(f"flow completeness against itself: {self_score:.1f}")

# Execution feedback: the user marks a point further out and the tagged MoveTo
# is retargeted to sample around that mark.
move = next(s for s in walk_stmts(program.entry_behavior().body)
            if isinstance(s, DoAction) and s.call.name == "MoveTo")
repaired = apply_structured_edit(
    program, [EditOp("set-move-target", move.line, (2.0, 17.0))], registry)
print("--- after the user's mark at (2.0, 17.0) ---")
print(print_program(repaired))
