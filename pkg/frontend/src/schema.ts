/**
 * Zod mirrors of the service's JSON wire formats. Every payload crossing the
 * HTTP boundary is parsed through these, so a drifting server contract fails
 * loudly in one place.
 */
import { z } from "zod";

export const flowNodeSchema = z.object({
  id: z.string(),
  label: z.string(),
  desc: z.string(),
});

export const flowEdgeSchema = z.object({
  src: z.string(),
  dst: z.string(),
  guard: z.string(),
  desc: z.string(),
});

export const flowGraphSchema = z.object({
  nodes: z.array(flowNodeSchema),
  edges: z.array(flowEdgeSchema),
});

export type FlowNode = z.infer<typeof flowNodeSchema>;
export type FlowEdge = z.infer<typeof flowEdgeSchema>;
export type FlowGraph = z.infer<typeof flowGraphSchema>;

const point = z.tuple([z.number(), z.number()]);

export const worldStateSchema = z.object({
  tick: z.number().int(),
  positions: z.record(z.string(), point),
  orientations: z.record(z.string(), z.number()),
  speeds: z.record(z.string(), z.number()),
  possession: z.string().nullable(),
  ball_target: point.nullable(),
});

export type WorldState = z.infer<typeof worldStateSchema>;

export const speakSchema = z.object({
  tick: z.number().int(),
  text: z.string(),
  line: z.number().int(),
});

export const actionRecordSchema = z.object({
  tick: z.number().int(),
  actor: z.string(),
  name: z.string(),
  args: z.array(z.unknown()),
  status: z.string(),
});

export const terminationSchema = z
  .object({ reason: z.string(), tick: z.number().int() })
  .passthrough();

export const traceSchema = z.object({
  id: z.string(),
  program_id: z.string(),
  scenario_id: z.string(),
  seed: z.number().int(),
  states: z.array(worldStateSchema),
  actions: z.array(actionRecordSchema),
  speaks: z.array(speakSchema),
  termination: terminationSchema,
});

export type Trace = z.infer<typeof traceSchema>;

/** One line of the run's NDJSON replay stream. */
export const tickRecordSchema = z.object({
  tick: z.number().int(),
  state: worldStateSchema,
  speaks: z.array(z.object({ text: z.string(), line: z.number().int() })),
  termination: terminationSchema.optional(),
});

export type TickRecord = z.infer<typeof tickRecordSchema>;

export const feedbackSessionSchema = z.object({
  kind: z.enum(["flow", "execution"]),
  tokens: z.array(z.tuple([z.number(), z.string()])),
  node_ids: z.array(z.string()),
  edge_ids: z.array(z.string()),
  trace_id: z.string(),
  pause_ticks: z.array(z.number().int()),
  marks: z.array(z.tuple([z.number(), z.number(), z.number()])),
});

export type FeedbackSession = z.infer<typeof feedbackSessionSchema>;

export const goalSchema = z.object({
  id: z.string(),
  team: z.string(),
  x_min: z.number(),
  x_max: z.number(),
  y_min: z.number(),
  y_max: z.number(),
});

export const workspaceSchema = z.object({
  x_min: z.number(),
  x_max: z.number(),
  y_min: z.number(),
  y_max: z.number(),
  cols: z.number().int(),
  rows: z.number().int(),
  goals: z.array(goalSchema),
});

export type Workspace = z.infer<typeof workspaceSchema>;

export const scenarioSchema = z.object({
  id: z.string(),
  registry: z.string(),
  workspace: workspaceSchema,
  entities: z.array(
    z.object({
      id: z.string(),
      role: z.string(),
      team: z.string(),
      radius: z.number(),
    }),
  ),
  initial: worldStateSchema,
  scripts: z.array(z.unknown()),
});

export type Scenario = z.infer<typeof scenarioSchema>;

export const sessionSchema = z.object({
  id: z.string(),
  registry: z.string(),
  scenario: scenarioSchema,
  demos: z.array(z.string()),
  versions: z.array(z.string()),
  runs: z.array(z.string()),
  feedback: z.array(z.string()),
});

export type Session = z.infer<typeof sessionSchema>;
