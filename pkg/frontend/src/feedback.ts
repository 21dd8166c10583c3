/**
 * Builds the feedback sessions the service ingests. Typed text stands in for
 * speech: each word is timestamped the moment it is entered, preserving the
 * alignment the grounding pipeline expects.
 */
import { FeedbackSession, feedbackSessionSchema } from "./schema.js";
import type { FlowView } from "./flowview.js";
import type { ReplayView } from "./replay.js";

export class FeedbackComposer {
  private readonly tokens: Array<[number, string]> = [];
  private readonly pauses: number[] = [];

  constructor(
    private readonly kind: "flow" | "execution",
    private readonly traceId = "",
  ) {}

  /** Record one typed utterance; each word gets the entry timestamp. */
  say(text: string, at: number): void {
    for (const word of text.split(/\s+/).filter((w) => w.length > 0)) {
      this.tokens.push([at, word]);
    }
  }

  pausedAt(tick: number): void {
    if (!this.pauses.includes(tick)) {
      this.pauses.push(tick);
    }
  }

  buildFlow(view: FlowView): FeedbackSession {
    if (this.kind !== "flow") throw new Error("composer is execution-kind");
    const selected = view.selection();
    return feedbackSessionSchema.parse({
      kind: "flow",
      tokens: this.tokens,
      node_ids: selected.node_ids,
      edge_ids: selected.edge_ids,
      trace_id: "",
      pause_ticks: [],
      marks: [],
    });
  }

  buildExecution(view: ReplayView): FeedbackSession {
    if (this.kind !== "execution") throw new Error("composer is flow-kind");
    return feedbackSessionSchema.parse({
      kind: "execution",
      tokens: this.tokens,
      node_ids: [],
      edge_ids: [],
      trace_id: this.traceId,
      pause_ticks: [...this.pauses].sort((a, b) => a - b),
      marks: view.allMarks().map((m) => [m.tick, m.x, m.y]),
    });
  }
}
