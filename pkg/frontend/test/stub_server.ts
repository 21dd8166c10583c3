/**
 * Recorded stub server: serves responses captured from the real service
 * (test/fixtures/*.json) and validates incoming feedback bodies against the
 * wire schema, exactly as the service would.
 */
import { createServer, Server } from "node:http";
import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { feedbackSessionSchema, traceSchema } from "../src/schema.js";

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "fixtures");

function fixture(name: string): unknown {
  return JSON.parse(readFileSync(join(FIXTURES, name), "utf8"));
}

export interface StubState {
  feedback: unknown[];
  repairs: unknown[];
}

export interface RunningStub {
  base: string;
  state: StubState;
  close(): Promise<void>;
}

/** NDJSON replay records derived from the recorded trace, one per tick. */
export function tickRecordsFromTrace(trace: unknown): string[] {
  const parsed = traceSchema.parse(trace);
  const byTick = new Map<number, Array<{ text: string; line: number }>>();
  for (const speak of parsed.speaks) {
    const bucket = byTick.get(speak.tick) ?? [];
    bucket.push({ text: speak.text, line: speak.line });
    byTick.set(speak.tick, bucket);
  }
  return parsed.states.map((state, index) => {
    const record: Record<string, unknown> = {
      tick: state.tick,
      state,
      speaks: byTick.get(state.tick) ?? [],
    };
    if (index === parsed.states.length - 1) {
      record.termination = parsed.termination;
    }
    return JSON.stringify(record);
  });
}

export async function startStub(): Promise<RunningStub> {
  const meta = fixture("meta.json") as { session: string; version: string; run: string };
  const state: StubState = { feedback: [], repairs: [] };

  const server: Server = createServer((req, res) => {
    const url = req.url ?? "";
    const send = (code: number, body: unknown, type = "application/json") => {
      res.writeHead(code, { "Content-Type": type });
      res.end(type === "application/json" ? JSON.stringify(body) : String(body));
    };

    if (req.method === "GET") {
      if (url === `/sessions/${meta.session}`) return send(200, fixture("session.json"));
      if (url.startsWith(`/programs/${meta.version}/flow`)) {
        return send(200, fixture("flow.json"));
      }
      if (url === `/runs/${meta.run}/trace`) return send(200, fixture("trace.json"));
      if (url === `/runs/${meta.run}/stream`) {
        res.writeHead(200, { "Content-Type": "application/x-ndjson" });
        for (const line of tickRecordsFromTrace(fixture("trace.json"))) {
          res.write(line + "\n");
        }
        return res.end();
      }
      return send(404, { detail: `unknown path ${url}` });
    }

    let raw = "";
    req.on("data", (chunk) => (raw += chunk));
    req.on("end", () => {
      const body = raw ? JSON.parse(raw) : {};
      if (url === `/runs/${meta.run}/feedback`) {
        const check = feedbackSessionSchema.safeParse(body);
        if (!check.success) {
          return send(400, { detail: check.error.issues });
        }
        state.feedback.push(check.data);
        return send(200, { id: `${meta.session}-feedback-${state.feedback.length}` });
      }
      if (url === `/sessions/${meta.session}/repair`) {
        if (!body.feedback_id && !body.edits) {
          return send(400, { detail: "feedback_id or edits required" });
        }
        state.repairs.push(body);
        return send(200, { version: "repaired-stub", diff: { cardinality: 1 } });
      }
      if (url === `/runs/${meta.run}/control`) {
        return send(200, { paused: body.op === "pause", cursor: body.tick ?? 0 });
      }
      return send(404, { detail: `unknown path ${url}` });
    });
  });

  await new Promise<void>((resolve) => server.listen(0, "127.0.0.1", resolve));
  const address = server.address();
  if (address === null || typeof address === "string") {
    throw new Error("stub failed to bind");
  }
  return {
    base: `http://127.0.0.1:${address.port}`,
    state,
    close: () => new Promise((resolve) => server.close(() => resolve())),
  };
}

export function fixtureMeta(): { session: string; version: string; run: string } {
  return fixture("meta.json") as { session: string; version: string; run: string };
}

export function fixtureJson(name: string): unknown {
  return fixture(name);
}
