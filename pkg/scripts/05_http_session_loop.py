"""The HTTP loop the browser console drives, exercised in-process.

Creates a session, uploads both demonstrations, synthesizes, runs, streams
the run with a pause, submits execution feedback, and repairs with a
structured edit, all against the same endpoints the UI uses.
"""
import json
import tempfile

from fastapi.testclient import TestClient

from tacticforge.arena import scenario_to_dict
from tacticforge.core import demo_to_dict
from tacticforge.fixtures import lure_demo_pass, lure_demo_shoot, lure_scenario
from tacticforge.service import create_app

with tempfile.TemporaryDirectory() as data_dir:
    client = TestClient(create_app(data_dir))

    sid = client.post("/sessions", json={
        "scenario": scenario_to_dict(lure_scenario("chase")),
        "registry": "soccer",
    }).json()["id"]
    print("session:", sid)

    for demo in (lure_demo_pass(), lure_demo_shoot()):
        out = client.post(f"/sessions/{sid}/demos", json=demo_to_dict(demo)).json()
        print("uploaded", out["id"])

    version = client.post(f"/sessions/{sid}/synthesize",
                          json={"client": "fallback"}).json()["version"]
    print("synthesized program version:", version)

    flow = client.get(f"/programs/{version}/flow").json()
    print("flow nodes:", [n["label"] for n in flow["nodes"]])

    run = client.post(f"/sessions/{sid}/runs", json={"seed": 1}).json()
    rid = run["id"]
    print("run:", rid, "->", run["termination"]["reason"])

    # stream the replay; stop reading at tick 40 as if the user paused there
    seen = 0
    with client.stream("GET", f"/runs/{rid}/stream") as resp:
        for line in resp.iter_lines():
            record = json.loads(line)
            seen += 1
            if record["speaks"]:
                print(f"  tick {record['tick']:4d} caption: {record['speaks'][0]['text']!r}")
            if record["tick"] >= 40:
                break
    print(f"streamed {seen} tick records, then paused")

    fid = client.post(f"/runs/{rid}/feedback", json={
        "kind": "execution", "trace_id": rid, "pause_ticks": [40],
        "tokens": [[40, "move"], [40, "further"], [40, "out"]],
        "marks": [[40, 2.0, 17.0]],
    }).json()["id"]
    print("feedback:", fid)

    program_text = client.get(f"/programs/{version}").text
    move_line = next(i + 1 for i, ln in enumerate(program_text.splitlines())
                     if "MoveTo" in ln)
    repaired = client.post(f"/sessions/{sid}/repair", json={
        "edits": [{"kind": "set-move-target", "line": move_line,
                   "arg": [2.0, 17.0]}],
    }).json()
    print("repaired version:", repaired["version"])
    print("diff:", repaired["diff"]["changed"])

    chain = client.get(f"/sessions/{sid}").json()["versions"]
    print("version chain:", chain)
