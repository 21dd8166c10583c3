/**
 * Contract suite: the console's client against the recorded stub server.
 * Feedback composed through the UI components must deserialize server-side
 * with zero schema violations, and the replay stream must match the trace.
 */
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { Client } from "../src/api.js";
import { FeedbackComposer } from "../src/feedback.js";
import { FlowView } from "../src/flowview.js";
import { ReplayView } from "../src/replay.js";
import { feedbackSessionSchema, TickRecord } from "../src/schema.js";
import { RunningStub, fixtureMeta, startStub } from "./stub_server.js";

let stub: RunningStub;
let client: Client;
const meta = fixtureMeta();

beforeAll(async () => {
  stub = await startStub();
  client = new Client(stub.base);
});

afterAll(async () => {
  await stub.close();
});

describe("service contract", () => {
  it("fetches and schema-parses session, flow, and trace", async () => {
    const session = await client.session(meta.session);
    expect(session.versions).toContain(meta.version);
    const flow = await client.flow(meta.version);
    expect(flow.nodes.length).toBeGreaterThan(3);
    const trace = await client.trace(meta.run);
    expect(trace.termination.reason).toBe("completed");
  });

  it("replays the stream identically to the persisted trace", async () => {
    const records: TickRecord[] = [];
    const count = await client.streamRun(meta.run, (r) => {
      records.push(r);
    });
    const trace = await client.trace(meta.run);
    expect(count).toBe(trace.states.length);
    expect(records.map((r) => r.state)).toEqual(trace.states);
    expect(records.at(-1)?.termination).toEqual(trace.termination);
  });

  it("POSTs composed execution feedback that validates server-side", async () => {
    const session = await client.session(meta.session);
    const replay = new ReplayView(session.scenario.workspace, {
      width: 600,
      height: 400,
    });
    await client.streamRun(meta.run, (record) => {
      replay.push(record);
    });
    replay.seek(12);
    const pausedAt = replay.pause();
    replay.placeMark(300, 200); // canvas midpoint -> (15, 10)

    const composer = new FeedbackComposer("execution", meta.run);
    composer.pausedAt(pausedAt);
    composer.say("move further out to the side", pausedAt);
    const sessionBody = composer.buildExecution(replay);

    const id = await client.submitFeedback(meta.run, sessionBody);
    expect(id).toMatch(/feedback/);
    expect(stub.state.feedback).toHaveLength(1);
    const received = feedbackSessionSchema.parse(stub.state.feedback[0]);
    expect(received.pause_ticks).toEqual([12]);
    expect(received.marks).toHaveLength(1);
    const [tick, x, y] = received.marks[0]!;
    expect(tick).toBe(12);
    expect(Math.abs(x - 15)).toBeLessThanOrEqual(0.1);
    expect(Math.abs(y - 10)).toBeLessThanOrEqual(0.1);
    expect(received.tokens.map(([, w]) => w).join(" ")).toBe(
      "move further out to the side",
    );
  });

  it("POSTs flow-annotation feedback and drives repair", async () => {
    const flow = await client.flow(meta.version);
    const view = new FlowView(flow);
    const target = flow.nodes.find((n) => n.label.startsWith("moveto"))!;
    view.clickNode(target.id);
    const composer = new FeedbackComposer("flow");
    composer.say("you do not need to move that far", 0);
    const body = composer.buildFlow(view);

    const fid = await client.submitFeedback(meta.run, body);
    const received = feedbackSessionSchema.parse(stub.state.feedback.at(-1));
    expect(received.kind).toBe("flow");
    expect(received.node_ids).toEqual([target.id]);

    const repair = await client.repairWithFeedback(meta.session, fid, "stub", [
      "behavior X():\n    terminate\n",
    ]);
    expect(repair.version).toBe("repaired-stub");
    expect(stub.state.repairs).toHaveLength(1);
  });

  it("malformed feedback is refused by the server", async () => {
    const resp = await fetch(`${stub.base}/runs/${meta.run}/feedback`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ kind: "execution", marks: [["not", "numbers", 0]] }),
    });
    expect(resp.status).toBe(400);
  });

  it("pause/resume/seek controls round trip", async () => {
    await client.control(meta.run, "pause");
    await client.control(meta.run, "seek", 5);
    await client.control(meta.run, "resume");
  });
});
