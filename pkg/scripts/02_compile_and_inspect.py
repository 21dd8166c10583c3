"""From behavior text to an inspectable state machine.

Parses the lure program, compiles it into the hierarchical interrupt-driven
machine, prints its shape, and exports the decision flow as DOT and JSON.
"""
import pathlib

from tacticforge.dsl import parse, print_program, strip_speak
from tacticforge.fixtures import program_text
from tacticforge.flow import export_dot, export_json_dict, extract_flow
from tacticforge.fsm import compile_program, fsm_stats
from tacticforge.registry import soccer_registry
from tacticforge.core import dumps

OUT = pathlib.Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

registry = soccer_registry()
source = program_text("lure")
program = parse(source, registry)

print("--- program (canonical print) ---")
print(print_program(program))

fsm = compile_program(program, registry)
print("--- machine shape ---")
for key, value in fsm_stats(fsm).items():
    print(f"  {key}: {value}")

# Narration does not change the machine's action skeleton.
bare = compile_program(strip_speak(program), registry)
assert fsm_stats(bare)["states"] == fsm_stats(fsm)["states"]

graph = extract_flow(fsm)
(OUT / "lure_flow.dot").write_text(export_dot(graph))
(OUT / "lure_flow.json").write_text(dumps(export_json_dict(graph)))
print(f"wrote {OUT / 'lure_flow.dot'} and lure_flow.json")

print("--- branch structure ---")
labels = graph.node_labels()
for edge in graph.edges:
    print(f"  {labels[edge.src]}  --[{edge.guard}]-->  {labels[edge.dst]}")
