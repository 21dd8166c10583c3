"""HTTP service powering the teach -> inspect -> correct loop.

State is content-addressed files under a data directory: program versions by
text hash, traces by run id, demos and feedback by id, plus one session index
file. Every state change is persisted immediately, so a restarted service
re-serves identical bytes. Program versions are append-only; repairs create
new versions and a repair against a superseded base version is refused (409).

Runs execute eagerly when created and their traces are persisted; the stream
endpoint replays the persisted tick records, advancing only while un-paused,
so pause/seek tick references match the trace exactly.
"""
from __future__ import annotations

import hashlib
import json
import threading
import time
from pathlib import Path

from fastapi import Body, FastAPI, HTTPException
from fastapi.responses import PlainTextResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles

from . import arena
from .core import DomainError, demo_from_dict, demo_to_dict, dumps, \
    dumps_compact, trace_from_dict, trace_to_dict
from .dsl import parse, print_program
from .flow import completeness, export_json_dict, extract_flow, flow_from_dict
from .fsm import compile_program
from .grounding import FeedbackSession, ground, ground_feedback, render
from .registry import builtin_registry
from .synthesis import (
    EditOp, StubClient, SynthesisError, apply_structured_edit,
    fallback_synthesize, flow_feedback_text, make_client, repair as repair_op,
    structural_diff, synthesize,
)


def _hash_text(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()[:16]


class Store:
    """File-backed state: programs/, traces/, demos/, feedback/, sessions.json."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        for sub in ("programs", "traces", "demos", "feedback", "provenance"):
            (self.root / sub).mkdir(parents=True, exist_ok=True)
        self.index_path = self.root / "sessions.json"
        self.sessions: dict = {}
        if self.index_path.exists():
            self.sessions = json.loads(self.index_path.read_text())
        self.lock = threading.Lock()

    def flush_index(self) -> None:
        self.index_path.write_text(dumps(self.sessions))

    # -- programs (content addressed)

    def put_program(self, text: str) -> str:
        version = _hash_text(text)
        path = self.root / "programs" / f"{version}.tact"
        if not path.exists():
            path.write_text(text)
        return version

    def get_program(self, version: str) -> str:
        path = self.root / "programs" / f"{version}.tact"
        if not path.exists():
            raise HTTPException(404, f"unknown program version {version!r}")
        return path.read_text()

    def put_provenance(self, version: str, prov: dict) -> None:
        (self.root / "provenance" / f"{version}.json").write_text(dumps(prov))

    # -- generic json records

    def put_json(self, kind: str, rid: str, data: dict) -> None:
        (self.root / kind / f"{rid}.json").write_text(dumps(data))

    def get_json(self, kind: str, rid: str) -> dict:
        path = self.root / kind / f"{rid}.json"
        if not path.exists():
            raise HTTPException(404, f"unknown {kind[:-1]} {rid!r}")
        return json.loads(path.read_text())

    def session(self, sid: str) -> dict:
        if sid not in self.sessions:
            raise HTTPException(404, f"unknown session {sid!r}")
        return self.sessions[sid]


class RunChannel:
    """Replay cursor over a persisted trace; single consumer per run."""

    def __init__(self):
        self.paused = False
        self.cursor = 0
        self.cond = threading.Condition()

    def control(self, op: str, tick: int | None = None) -> dict:
        with self.cond:
            if op == "pause":
                self.paused = True
            elif op == "resume":
                self.paused = False
            elif op == "seek":
                if tick is None:
                    raise HTTPException(400, "seek needs a tick")
                self.cursor = max(0, int(tick))
            else:
                raise HTTPException(400, f"unknown control op {op!r}")
            self.cond.notify_all()
            return {"paused": self.paused, "cursor": self.cursor}


def tick_records(trace_dict: dict) -> list[dict]:
    """One streamable record per tick: world state plus that tick's speaks."""
    speaks_by_tick: dict[int, list] = {}
    for sp in trace_dict["speaks"]:
        speaks_by_tick.setdefault(sp["tick"], []).append(
            {"text": sp["text"], "line": sp["line"]})
    records = []
    for state in trace_dict["states"]:
        records.append({
            "tick": state["tick"],
            "state": state,
            "speaks": speaks_by_tick.get(state["tick"], []),
        })
    if records:
        records[-1]["termination"] = trace_dict["termination"]
    return records


def create_app(data_dir: str | Path, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="tacticforge")
    store = Store(data_dir)
    channels: dict[str, RunChannel] = {}

    def registry_of(session: dict):
        return builtin_registry(session["registry"])

    def latest_version(session: dict) -> str:
        if not session["versions"]:
            raise HTTPException(404, "session has no program versions yet")
        return session["versions"][-1]

    def load_demo_transcripts(session: dict) -> list[str]:
        out = []
        for did in session["demos"]:
            demo = demo_from_dict(store.get_json("demos", did))
            out.append(render(ground(demo)))
        return out

    def build_client(body: dict, session: dict):
        kind = body.get("client", "fallback")
        if kind == "stub":
            responses = body.get("stub_responses")
            if not isinstance(responses, list) or not responses:
                raise HTTPException(400, "stub client needs stub_responses")
            return StubClient([str(r) for r in responses])
        if kind == "live":
            try:
                return make_client("live")
            except RuntimeError as err:
                raise HTTPException(502, str(err))
        if kind == "fallback":
            return None
        raise HTTPException(400, f"unknown client {kind!r}")

    # -- sessions

    @app.post("/sessions")
    def create_session(body: dict = Body(...)):
        scenario_dict = body.get("scenario")
        if not isinstance(scenario_dict, dict):
            raise HTTPException(400, "scenario object required")
        try:
            scenario = arena.scenario_from_dict(scenario_dict)
        except (DomainError, KeyError, TypeError) as err:
            raise HTTPException(400, f"bad scenario: {err}")
        registry_id = body.get("registry", scenario.registry_id)
        try:
            builtin_registry(registry_id)
        except KeyError as err:
            raise HTTPException(400, str(err))
        with store.lock:
            sid = f"session-{len(store.sessions) + 1}"
            store.sessions[sid] = {
                "id": sid,
                "registry": registry_id,
                "scenario": arena.scenario_to_dict(scenario),
                "demos": [],
                "versions": [],
                "runs": [],
                "feedback": [],
            }
            store.flush_index()
        return {"id": sid}

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        return store.session(sid)

    # -- demonstrations

    @app.post("/sessions/{sid}/demos")
    def upload_demo(sid: str, body: dict = Body(...)):
        session = store.session(sid)
        try:
            demo = demo_from_dict(body)
        except (DomainError, KeyError, TypeError) as err:
            raise HTTPException(400, f"bad demonstration: {err}")
        with store.lock:
            did = f"{sid}-demo-{len(session['demos']) + 1}"
            store.put_json("demos", did, demo_to_dict(demo))
            session["demos"].append(did)
            store.flush_index()
        return {"id": did, "transcript": render(ground(demo))}

    # -- synthesis

    @app.post("/sessions/{sid}/synthesize")
    def synthesize_program(sid: str, body: dict = Body(default={})):
        session = store.session(sid)
        registry = registry_of(session)
        client = build_client(body, session)
        transcripts = load_demo_transcripts(session)
        if not transcripts:
            raise HTTPException(400, "upload at least one demonstration first")
        try:
            if client is None:
                demos = [demo_from_dict(store.get_json("demos", d))
                         for d in session["demos"]]
                program = fallback_synthesize(demos, registry)
                prov = {"template": "fallback", "attempt_count": 1,
                        "attempts": [],
                        "program_text": print_program(program)}
            else:
                program, prov = synthesize(transcripts, registry, client)
        except SynthesisError as err:
            raise HTTPException(502, detail={
                "message": f"synthesis failed: {err}",
                "attempts": err.attempts,
            })
        except DomainError as err:
            raise HTTPException(502, f"synthesis failed: {err}")
        text = print_program(program)
        with store.lock:
            version = store.put_program(text)
            store.put_provenance(version, prov)
            session["versions"].append(version)
            store.flush_index()
        return {"version": version, "program": text,
                "attempts": prov["attempt_count"]}

    # -- programs

    @app.get("/programs/{version}", response_class=PlainTextResponse)
    def get_program(version: str):
        return store.get_program(version)

    @app.get("/programs/{version}/flow")
    def get_flow(version: str, minimize: bool = False, registry: str = "soccer"):
        text = store.get_program(version)
        reg = builtin_registry(registry)
        fsm = compile_program(parse(text, reg), reg)
        return export_json_dict(extract_flow(fsm, minimize=minimize))

    @app.get("/programs/{v}/diff/{w}")
    def diff_programs(v: str, w: str, registry: str = "soccer"):
        reg = builtin_registry(registry)
        a = parse(store.get_program(v), reg)
        b = parse(store.get_program(w), reg)
        return structural_diff(a, b)

    # -- runs

    @app.post("/sessions/{sid}/runs")
    def create_run(sid: str, body: dict = Body(default={})):
        session = store.session(sid)
        seed = int(body.get("seed", 0))
        max_ticks = int(body.get("max_ticks", 600))
        version = body.get("version") or latest_version(session)
        scenario_dict = body.get("scenario") or session["scenario"]
        try:
            scenario = arena.scenario_from_dict(scenario_dict)
        except (DomainError, KeyError, TypeError) as err:
            raise HTTPException(400, f"bad scenario: {err}")
        registry = registry_of(session)
        program = parse(store.get_program(version), registry)
        with store.lock:
            rid = f"{sid}-run-{len(session['runs']) + 1}"
        trace = arena.run(program, scenario, seed=seed, max_ticks=max_ticks,
                          registry=registry, trace_id=rid)
        with store.lock:
            store.put_json("traces", rid, trace_to_dict(trace))
            session["runs"].append(rid)
            store.flush_index()
        channels[rid] = RunChannel()
        return {"id": rid, "version": version, "seed": seed,
                "termination": trace.termination}

    @app.get("/runs/{rid}/trace")
    def get_trace(rid: str):
        return store.get_json("traces", rid)

    @app.get("/runs/{rid}/stream")
    def stream_run(rid: str):
        trace_dict = store.get_json("traces", rid)
        channel = channels.setdefault(rid, RunChannel())
        records = tick_records(trace_dict)

        def generate():
            while True:
                with channel.cond:
                    while channel.paused:
                        channel.cond.wait(timeout=0.05)
                    if channel.cursor >= len(records):
                        return
                    record = records[channel.cursor]
                    channel.cursor += 1
                yield dumps_compact(record) + "\n"

        return StreamingResponse(generate(), media_type="application/x-ndjson")

    @app.post("/runs/{rid}/control")
    def control_run(rid: str, body: dict = Body(...)):
        store.get_json("traces", rid)  # 404 for unknown runs
        channel = channels.setdefault(rid, RunChannel())
        return channel.control(body.get("op", ""), body.get("tick"))

    # -- feedback

    @app.post("/runs/{rid}/feedback")
    def post_feedback(rid: str, body: dict = Body(...)):
        trace_dict = store.get_json("traces", rid)
        sid = rid.split("-run-")[0]
        session = store.session(sid)
        try:
            fb = FeedbackSession.from_dict(body)
            if fb.kind == "execution":
                trace = trace_from_dict(trace_dict)
                ground_feedback(trace, fb)  # validates tick references
        except (DomainError, KeyError, TypeError) as err:
            raise HTTPException(400, f"bad feedback: {err}")
        with store.lock:
            fid = f"{sid}-feedback-{len(session['feedback']) + 1}"
            record = fb.to_dict()
            record["run_id"] = rid
            store.put_json("feedback", fid, record)
            session["feedback"].append(fid)
            store.flush_index()
        return {"id": fid}

    # -- repair

    @app.post("/sessions/{sid}/repair")
    def repair_program(sid: str, body: dict = Body(...)):
        session = store.session(sid)
        registry = registry_of(session)
        with store.lock:
            latest = latest_version(session)
            base = body.get("base_version") or latest
            if base != latest:
                raise HTTPException(
                    409, f"version {base} already repaired (latest is {latest})")
        program = parse(store.get_program(base), registry)

        if "edits" in body:
            try:
                ops = [EditOp(e["kind"], int(e["line"]),
                              tuple(e["arg"]) if isinstance(e.get("arg"), list)
                              else e.get("arg"))
                       for e in body["edits"]]
                repaired = apply_structured_edit(program, ops, registry)
            except (KeyError, TypeError, ValueError) as err:
                raise HTTPException(400, f"bad edit: {err}")
            prov = {"template": "structured-edit", "attempt_count": 1,
                    "attempts": [],
                    "diff": structural_diff(program, repaired),
                    "program_text": print_program(repaired)}
        else:
            fid = body.get("feedback_id", "")
            record = store.get_json("feedback", fid)
            fb = FeedbackSession.from_dict(record)
            if fb.kind == "flow":
                fsm = compile_program(program, registry)
                flow = extract_flow(fsm)
                feedback_text = flow_feedback_text(fb, flow)
            else:
                trace = trace_from_dict(store.get_json("traces", record["run_id"]))
                feedback_text = render(ground_feedback(trace, fb))
            client = build_client(body, session)
            if client is None:
                raise HTTPException(400, "repair needs a stub or live client, or edits")
            transcripts = load_demo_transcripts(session)
            if not transcripts:
                raise HTTPException(400, "repair requires the original demonstrations")
            try:
                repaired, prov = repair_op(program, feedback_text, transcripts,
                                           registry, client)
            except SynthesisError as err:
                raise HTTPException(502, detail={
                    "message": f"repair failed: {err}",
                    "attempts": err.attempts,
                })

        text = print_program(repaired)
        with store.lock:
            if latest_version(session) != base:
                raise HTTPException(409, "version advanced during repair")
            version = store.put_program(text)
            store.put_provenance(version, prov)
            session["versions"].append(version)
            store.flush_index()
        return {"version": version, "program": text, "diff": prov.get("diff")}

    # -- scoring convenience (mirrors the CLI)

    @app.post("/score/completeness")
    def score_completeness(body: dict = Body(...)):
        try:
            sys_g = flow_from_dict(body["system"])
            gt_g = flow_from_dict(body["ground_truth"])
            value = completeness(sys_g, gt_g, body.get("aliases"))
        except (KeyError, ValueError) as err:
            raise HTTPException(400, f"bad flow payload: {err}")
        return {"completeness": value}

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=str(static_dir), html=True),
                  name="console")

    return app
