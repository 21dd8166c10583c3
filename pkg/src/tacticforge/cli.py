"""Command line for every pipeline stage.

Commands: parse, compile, flow, run, field, ground, synthesize, repair,
score, serve. With --json-errors, failures print one machine-readable JSON
object to stderr; exit status is 0/1 either way.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import arena
from .core import demo_from_dict, dumps, trace_from_dict, trace_to_dict
from .dsl import parse as parse_program
from .dsl import print_program
from .fields import normalize, to_csv, to_heatmap_dict
from .flow import (
    Rubric, RubricScore, completeness, correctness, export_dot,
    export_json_dict, extract_flow, flow_from_dict,
)
from .fsm import compile_program, fsm_stats
from .grounding import FeedbackSession, ground, ground_feedback, render
from .registry import builtin_registry, registry_from_dict
from .synthesis import (
    StubClient, fallback_synthesize, make_client, repair, synthesize,
)


class CliError(RuntimeError):
    pass


def _load_registry(args) -> object:
    path = getattr(args, "registry", None)
    if path and Path(path).exists():
        return registry_from_dict(json.loads(Path(path).read_text()))
    return builtin_registry(path or "soccer")


def _load_program(path: str, registry):
    return parse_program(Path(path).read_text(), registry)


def _load_scenario(path: str) -> arena.Scenario:
    return arena.scenario_from_dict(json.loads(Path(path).read_text()))


def _client(args):
    if args.client == "stub":
        responses = [Path(p).read_text() for p in (args.stub_response or [])]
        if not responses:
            raise CliError("--client stub needs at least one --stub-response file")
        return StubClient(responses)
    if args.client == "live":
        return make_client("live")
    return None  # fallback


def cmd_parse(args) -> int:
    program = _load_program(args.file, _load_registry(args))
    behavior = program.entry_behavior()
    print(f"entry behavior: {behavior.name}")
    print(f"behaviors: {len(program.behaviors)}")
    print(f"statements: {sum(1 for _ in _walk(program))}")
    return 0


def _walk(program):
    from .dsl import walk_stmts
    for b in program.behaviors:
        yield from walk_stmts(b.body)


def cmd_compile(args) -> int:
    registry = _load_registry(args)
    fsm = compile_program(_load_program(args.file, registry), registry)
    for key, value in fsm_stats(fsm).items():
        print(f"{key}: {value}")
    return 0


def cmd_flow(args) -> int:
    registry = _load_registry(args)
    fsm = compile_program(_load_program(args.file, registry), registry)
    graph = extract_flow(fsm, minimize=args.minimize)
    text = export_dot(graph) if args.dot else dumps(export_json_dict(graph))
    _emit(text, args.out)
    return 0


def cmd_run(args) -> int:
    registry = _load_registry(args)
    scenario = _load_scenario(args.scenario)
    program = _load_program(args.file, registry)
    trace = arena.run(program, scenario, seed=args.seed, max_ticks=args.max_ticks,
                      registry=registry)
    if args.trace:
        Path(args.trace).write_text(dumps(trace_to_dict(trace)))
    term = trace.termination
    print(f"termination: {term['reason']} at tick {term['tick']}")
    for sp in trace.speaks:
        print(f"  [{sp.tick:4d}] {sp.text}")
    return 0 if term["reason"] in ("completed", "max-ticks") else 1


def cmd_field(args) -> int:
    from .constraints import EvalContext, field as cond_field
    from .dsl import parse_condition
    registry = _load_registry(args)
    scenario = _load_scenario(args.scenario)
    expr = parse_condition(args.expr, registry)
    ctx = EvalContext(scenario.workspace, scenario.entity_map(), scenario.initial)
    f = cond_field(expr, ctx)
    if args.normalize:
        f = normalize(f)
    if args.csv:
        Path(args.csv).write_text(to_csv(f))
        print(f"wrote {scenario.workspace.rows}x{scenario.workspace.cols} field to {args.csv}")
    else:
        print(dumps(to_heatmap_dict(f)), end="")
    return 0


def cmd_ground(args) -> int:
    demo = demo_from_dict(json.loads(Path(args.demo).read_text()))
    print(render(ground(demo)))
    return 0


def cmd_synthesize(args) -> int:
    registry = _load_registry(args)
    demos = [demo_from_dict(json.loads(Path(p).read_text())) for p in args.demos]
    client = _client(args)
    if client is None:
        program = fallback_synthesize(demos, registry)
        provenance = {"template": "fallback", "attempt_count": 1}
    else:
        transcripts = [render(ground(d)) for d in demos]
        program, provenance = synthesize(transcripts, registry, client)
    text = print_program(program)
    _emit(text, args.out)
    if args.provenance:
        Path(args.provenance).write_text(dumps(provenance))
    return 0


def cmd_repair(args) -> int:
    registry = _load_registry(args)
    program = _load_program(args.program, registry)
    fb = FeedbackSession.from_dict(json.loads(Path(args.feedback).read_text()))
    demos = [demo_from_dict(json.loads(Path(p).read_text())) for p in args.demos]
    transcripts = [render(ground(d)) for d in demos]
    if fb.kind == "execution":
        if not args.trace:
            raise CliError("execution feedback needs --trace")
        trace = trace_from_dict(json.loads(Path(args.trace).read_text()))
        feedback_text = render(ground_feedback(trace, fb))
    else:
        from .synthesis import flow_feedback_text
        fsm = compile_program(program, registry)
        feedback_text = flow_feedback_text(fb, extract_flow(fsm))
    client = _client(args)
    if client is None:
        raise CliError("repair needs --client stub or live")
    repaired, provenance = repair(program, feedback_text, transcripts, registry,
                                  client)
    _emit(print_program(repaired), args.out)
    if args.provenance:
        Path(args.provenance).write_text(dumps(provenance))
    return 0


def cmd_score(args) -> int:
    if args.flow:
        sys_g = flow_from_dict(json.loads(Path(args.flow).read_text()))
        gt_g = flow_from_dict(json.loads(Path(args.gt).read_text()))
        aliases = json.loads(Path(args.alias).read_text()) if args.alias else None
        print(f"{completeness(sys_g, gt_g, aliases):.1f}")
        return 0
    if args.rubric:
        rubric = Rubric(tuple(json.loads(Path(args.rubric).read_text())))
        values = tuple(json.loads(Path(args.scores).read_text()))
        print(f"{correctness(RubricScore(rubric, values)):.1f}")
        return 0
    raise CliError("score needs --flow/--gt or --rubric/--scores")


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    port, data_dir, static = args.port, args.data, args.static
    if args.config:
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        cfg = tomllib.loads(Path(args.config).read_text())
        port = cfg.get("port", port)
        data_dir = cfg.get("data_dir", data_dir)
        static = cfg.get("static_dir", static)
        import os
        for key, value in cfg.get("client", {}).items():
            os.environ.setdefault(f"TACTICFORGE_LLM_{key.upper()}", str(value))
    app = create_app(data_dir, static)
    uvicorn.run(app, host=args.host, port=port)
    return 0


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        print(text, end="" if text.endswith("\n") else "\n")


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="tacticforge")
    top.add_argument("--json-errors", action="store_true",
                     help="print failures as JSON on stderr")
    sub = top.add_subparsers(dest="command", required=True)

    def common(p, registry=True):
        if registry:
            p.add_argument("--registry", default="soccer",
                           help="builtin registry id or registry.json path")

    p = sub.add_parser("parse", help="parse a .tact file and summarize it")
    p.add_argument("file")
    common(p)
    p.set_defaults(fn=cmd_parse)

    p = sub.add_parser("compile", help="compile to a state machine and print stats")
    p.add_argument("file")
    common(p)
    p.set_defaults(fn=cmd_compile)

    p = sub.add_parser("flow", help="export the decision flow")
    p.add_argument("file")
    p.add_argument("--dot", action="store_true")
    p.add_argument("--json", dest="dot", action="store_false")
    p.add_argument("--minimize", action="store_true")
    p.add_argument("--out")
    common(p)
    p.set_defaults(fn=cmd_flow)

    p = sub.add_parser("run", help="execute a program in a scenario")
    p.add_argument("file")
    p.add_argument("--scenario", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-ticks", type=int, default=600)
    p.add_argument("--trace")
    common(p)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("field", help="dump a composed constraint field")
    p.add_argument("expr")
    p.add_argument("--scenario", required=True)
    p.add_argument("--csv")
    p.add_argument("--normalize", action="store_true")
    common(p)
    p.set_defaults(fn=cmd_field)

    p = sub.add_parser("ground", help="render a demonstration transcript")
    p.add_argument("demo")
    p.set_defaults(fn=cmd_ground)

    p = sub.add_parser("synthesize", help="synthesize a program from demos")
    p.add_argument("--demos", nargs="+", required=True)
    p.add_argument("--client", choices=("stub", "live", "fallback"),
                   default="fallback")
    p.add_argument("--stub-response", action="append")
    p.add_argument("--out")
    p.add_argument("--provenance")
    common(p)
    p.set_defaults(fn=cmd_synthesize)

    p = sub.add_parser("repair", help="repair a program from feedback")
    p.add_argument("--program", required=True)
    p.add_argument("--feedback", required=True)
    p.add_argument("--demos", nargs="+", required=True)
    p.add_argument("--trace")
    p.add_argument("--client", choices=("stub", "live"), default="stub")
    p.add_argument("--stub-response", action="append")
    p.add_argument("--out")
    p.add_argument("--provenance")
    common(p)
    p.set_defaults(fn=cmd_repair)

    p = sub.add_parser("score", help="completeness or correctness scores")
    p.add_argument("--flow")
    p.add_argument("--gt")
    p.add_argument("--alias")
    p.add_argument("--rubric")
    p.add_argument("--scores")
    p.set_defaults(fn=cmd_score)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--port", type=int, default=8733)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--data", default="./tacticforge-data")
    p.add_argument("--static")
    p.add_argument("--config", help="tacticforge.toml")
    p.set_defaults(fn=cmd_serve)

    return top


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except Exception as err:  # noqa: BLE001 - single reporting point
        if args.json_errors:
            payload = {"error": type(err).__name__, "message": str(err)}
            for attr in ("line", "col"):
                if hasattr(err, attr):
                    payload[attr] = getattr(err, attr)
            print(json.dumps(payload), file=sys.stderr)
        else:
            print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
