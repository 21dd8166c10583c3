/**
 * Typed client for the service endpoints the console consumes. Every
 * response is schema-parsed; feedback is schema-validated before it is sent.
 */
import {
  FeedbackSession,
  feedbackSessionSchema,
  FlowGraph,
  flowGraphSchema,
  Session,
  sessionSchema,
  TickRecord,
  tickRecordSchema,
  Trace,
  traceSchema,
} from "./schema.js";

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
  ) {
    super(message);
  }
}

type FetchLike = typeof fetch;

export class Client {
  constructor(
    private readonly base: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const resp = await this.fetchImpl(`${this.base}${path}`, init);
    if (!resp.ok) {
      throw new ApiError(`${path}: ${resp.status} ${await resp.text()}`, resp.status);
    }
    return resp;
  }

  private async getJson(path: string): Promise<unknown> {
    return (await this.request(path)).json();
  }

  async session(id: string): Promise<Session> {
    return sessionSchema.parse(await this.getJson(`/sessions/${id}`));
  }

  async flow(version: string, minimize = false): Promise<FlowGraph> {
    const query = minimize ? "?minimize=true" : "";
    return flowGraphSchema.parse(
      await this.getJson(`/programs/${version}/flow${query}`),
    );
  }

  async program(version: string): Promise<string> {
    return (await this.request(`/programs/${version}`)).text();
  }

  async trace(runId: string): Promise<Trace> {
    return traceSchema.parse(await this.getJson(`/runs/${runId}/trace`));
  }

  async control(runId: string, op: "pause" | "resume" | "seek", tick?: number): Promise<void> {
    await this.request(`/runs/${runId}/control`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(tick === undefined ? { op } : { op, tick }),
    });
  }

  async submitFeedback(runId: string, session: FeedbackSession): Promise<string> {
    const body = feedbackSessionSchema.parse(session); // never send junk
    const resp = await this.request(`/runs/${runId}/feedback`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    const out = (await resp.json()) as { id: string };
    return out.id;
  }

  async repairWithFeedback(
    sessionId: string,
    feedbackId: string,
    client: "stub" | "live",
    stubResponses?: string[],
  ): Promise<{ version: string }> {
    const resp = await this.request(`/sessions/${sessionId}/repair`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({
        feedback_id: feedbackId,
        client,
        ...(stubResponses ? { stub_responses: stubResponses } : {}),
      }),
    });
    return (await resp.json()) as { version: string };
  }

  /**
   * Consume the run's NDJSON replay stream, invoking onRecord per tick.
   * Resolves when the stream ends or the consumer returns false.
   */
  async streamRun(
    runId: string,
    onRecord: (record: TickRecord) => boolean | void,
  ): Promise<number> {
    const resp = await this.request(`/runs/${runId}/stream`);
    if (!resp.body) {
      throw new ApiError("empty stream body", 502);
    }
    const reader = resp.body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    let count = 0;
    try {
      for (;;) {
        const { done, value } = await reader.read();
        if (done) break;
        buffer += decoder.decode(value, { stream: true });
        let newline = buffer.indexOf("\n");
        while (newline >= 0) {
          const line = buffer.slice(0, newline).trim();
          buffer = buffer.slice(newline + 1);
          if (line) {
            const record = tickRecordSchema.parse(JSON.parse(line));
            count += 1;
            if (onRecord(record) === false) {
              return count;
            }
          }
          newline = buffer.indexOf("\n");
        }
      }
    } finally {
      await reader.cancel().catch(() => undefined);
    }
    return count;
  }
}
