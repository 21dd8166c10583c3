"""Retargeting the machinery to a non-soccer domain.

Swaps in the manufacturing registry (a helper robot restocking a worker's
parts bucket) and executes the restocking behavior against a scripted truth
timeline: the bucket reads low until the swap, and the worker grants
permission at t = 6 s. Same compiler, same machine semantics, zero soccer
code involved.
"""
from tacticforge.dsl import parse
from tacticforge.fixtures import manufacturing_world, program_text
from tacticforge.registry import manufacturing_registry
from tacticforge.scripted import run_scripted

registry = manufacturing_registry()
program = parse(program_text("manufacturing"), registry)
print("--- program ---")
print(program_text("manufacturing"))

result = run_scripted(program, registry, manufacturing_world(), max_ticks=300)
print("--- narrated execution ---")
events = [(s.tick, f'say "{s.text}"') for s in result.trace.speaks]
events += [(a.tick, f"act {a.name} -> {a.status}") for a in result.trace.actions]
for tick, line in sorted(events):
    print(f"  [{tick:4d}] {line}")
print(f"  [ end] {result.trace.termination['reason']} "
      "(the while-True loop idles once the bucket is full)")
