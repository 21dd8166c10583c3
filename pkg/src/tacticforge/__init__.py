"""Teachable multi-agent tactic programs.

A behavior DSL compiles into hierarchical, interrupt-driven state machines;
spatial constraints double as boolean predicates and composable probability
fields; a 2D arena executes programs with synchronized narration; grounded
demonstrations feed a synthesize/inspect/repair loop with quantitative
flow-alignment metrics. See README.md for a tour.
"""

__version__ = "0.1.0"
