import { describe, expect, it } from "vitest";

import { FlowView, edgeKey, layeredLayout } from "../src/flowview.js";
import { flowGraphSchema } from "../src/schema.js";
import { fixtureJson } from "./stub_server.js";

const recorded = () => flowGraphSchema.parse(fixtureJson("flow.json"));

describe("flow view", () => {
  it("renders the recorded lure flow with a visible branch", () => {
    const view = new FlowView(recorded());
    const svg = view.svg();
    const branch = recorded().nodes.find((n) => n.label.startsWith("branch"))!;
    const outgoing = recorded().edges.filter((e) => e.src === branch.id);
    expect(outgoing.length).toBeGreaterThanOrEqual(2);
    for (const edge of outgoing) {
      expect(svg).toContain(`data-edge="${edgeKey(edge.src, edge.dst)}"`);
      expect(svg).toContain(edge.guard.replace(/&/g, "&amp;").replace(/</g, "&lt;"));
    }
  });

  it("layout is deterministic and label-seeded", () => {
    const a = layeredLayout(recorded());
    const b = layeredLayout(recorded());
    expect([...a.entries()]).toEqual([...b.entries()]);
    // renaming ids but keeping labels must not change relative ordering
    const graph = recorded();
    const renamed = {
      nodes: graph.nodes.map((n) => ({ ...n, id: `zz-${n.id}` })),
      edges: graph.edges.map((e) => ({ ...e, src: `zz-${e.src}`, dst: `zz-${e.dst}` })),
    };
    const c = layeredLayout(renamed);
    const order = (m: Map<string, { label: string; x: number; y: number }>) =>
      [...m.values()]
        .sort((p, q) => p.y - q.y || p.x - q.x)
        .map((p) => p.label);
    expect(order(c as never)).toEqual(order(a as never));
  });

  it("click toggles selection and reveals the description", () => {
    const view = new FlowView(recorded());
    const pass = recorded().nodes.find((n) => n.label === "pass(teammate)")!;
    const desc = view.clickNode(pass.id);
    expect(desc).toBe(pass.desc);
    expect(desc.length).toBeGreaterThan(0);
    expect(view.selection().node_ids).toEqual([pass.id]);
    expect(view.svg()).toContain("#f5d90a"); // annotation yellow
    view.clickNode(pass.id);
    expect(view.selection().node_ids).toEqual([]);
  });

  it("edge clicks reveal guard text", () => {
    const graph = recorded();
    const branch = graph.nodes.find((n) => n.label.startsWith("branch"))!;
    const edge = graph.edges.find((e) => e.src === branch.id)!;
    const view = new FlowView(graph);
    const desc = view.clickEdge(edge.src, edge.dst);
    expect(desc.length).toBeGreaterThan(0);
    expect(view.selection().edge_ids).toEqual([edgeKey(edge.src, edge.dst)]);
  });

  it("empty graphs render an empty-state message", () => {
    const view = new FlowView({ nodes: [], edges: [] });
    expect(view.svg()).toContain("nothing to inspect yet");
  });

  it("comments attach only to known elements", () => {
    const view = new FlowView(recorded());
    const node = recorded().nodes[0]!;
    view.comment(node.id, "looks wrong");
    expect(view.commentOf(node.id)).toBe("looks wrong");
    expect(() => view.comment("ghost", "nope")).toThrow();
  });
});
