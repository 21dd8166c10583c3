/**
 * Decision-flow inspection: deterministic layered layout, click-to-reveal
 * descriptions, and annotation by selecting nodes and edges (selected
 * elements render yellow). The view holds no authority: it is a pure
 * function of the flow graph plus the local selection set.
 */
import type { FlowGraph } from "./schema.js";

export interface Placed {
  id: string;
  label: string;
  desc: string;
  x: number;
  y: number;
  layer: number;
}

export const NODE_W = 170;
export const NODE_H = 44;
const GAP_X = 70;
const GAP_Y = 26;
const HIGHLIGHT = "#f5d90a"; // annotation yellow

export function edgeKey(src: string, dst: string): string {
  return `${src}->${dst}`;
}

/**
 * Longest-path layering from the roots; within a layer, nodes sort by their
 * canonical label, so the same graph always lays out the same way.
 */
export function layeredLayout(graph: FlowGraph): Map<string, Placed> {
  const incoming = new Map<string, number>();
  for (const node of graph.nodes) incoming.set(node.id, 0);
  for (const edge of graph.edges) {
    incoming.set(edge.dst, (incoming.get(edge.dst) ?? 0) + 1);
  }
  const layer = new Map<string, number>();
  const roots = graph.nodes
    .filter((n) => (incoming.get(n.id) ?? 0) === 0)
    .map((n) => n.id)
    .sort();
  // fall back to the lexicographically first node for all-cycle graphs
  if (roots.length === 0 && graph.nodes.length > 0) {
    roots.push([...graph.nodes].sort((a, b) => (a.label < b.label ? -1 : 1))[0]!.id);
  }
  const queue = [...roots];
  for (const r of roots) layer.set(r, 0);
  while (queue.length > 0) {
    const cur = queue.shift()!;
    const next = (layer.get(cur) ?? 0) + 1;
    for (const edge of graph.edges) {
      if (edge.src !== cur) continue;
      if ((layer.get(edge.dst) ?? -1) >= next) continue;
      if (layer.has(edge.dst) && (layer.get(edge.dst) ?? 0) >= next) continue;
      if (!layer.has(edge.dst) || (layer.get(edge.dst) ?? 0) < next) {
        // avoid infinite growth on cycles: cap at node count
        if (next < graph.nodes.length) {
          layer.set(edge.dst, next);
          queue.push(edge.dst);
        }
      }
    }
  }
  for (const node of graph.nodes) {
    if (!layer.has(node.id)) layer.set(node.id, 0);
  }
  const byLayer = new Map<number, string[]>();
  const labels = new Map(graph.nodes.map((n) => [n.id, n.label]));
  for (const [id, l] of layer) {
    const bucket = byLayer.get(l) ?? [];
    bucket.push(id);
    byLayer.set(l, bucket);
  }
  const placed = new Map<string, Placed>();
  for (const [l, ids] of byLayer) {
    ids.sort((a, b) => {
      const la = labels.get(a) ?? "";
      const lb = labels.get(b) ?? "";
      return la < lb ? -1 : la > lb ? 1 : a < b ? -1 : 1;
    });
    ids.forEach((id, slot) => {
      const node = graph.nodes.find((n) => n.id === id)!;
      placed.set(id, {
        id,
        label: node.label,
        desc: node.desc,
        x: slot * (NODE_W + GAP_X),
        y: l * (NODE_H + GAP_Y),
        layer: l,
      });
    });
  }
  return placed;
}

function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

// attribute values only need & < " escaped; keeps edge keys greppable
function escapeAttr(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/"/g, "&quot;");
}

export class FlowView {
  private readonly placed: Map<string, Placed>;
  private readonly selectedNodes = new Set<string>();
  private readonly selectedEdges = new Set<string>();
  private readonly comments = new Map<string, string>();

  constructor(readonly graph: FlowGraph) {
    this.placed = layeredLayout(graph);
  }

  layout(): Map<string, Placed> {
    return this.placed;
  }

  /** Toggle node selection; returns its description for the side panel. */
  clickNode(id: string): string {
    const node = this.graph.nodes.find((n) => n.id === id);
    if (!node) throw new Error(`unknown node ${id}`);
    if (this.selectedNodes.has(id)) {
      this.selectedNodes.delete(id);
    } else {
      this.selectedNodes.add(id);
    }
    return node.desc;
  }

  clickEdge(src: string, dst: string): string {
    const edge = this.graph.edges.find((e) => e.src === src && e.dst === dst);
    if (!edge) throw new Error(`unknown edge ${src}->${dst}`);
    const key = edgeKey(src, dst);
    if (this.selectedEdges.has(key)) {
      this.selectedEdges.delete(key);
    } else {
      this.selectedEdges.add(key);
    }
    return edge.desc || edge.guard;
  }

  comment(id: string, text: string): void {
    if (
      !this.graph.nodes.some((n) => n.id === id) &&
      !this.graph.edges.some((e) => edgeKey(e.src, e.dst) === id)
    ) {
      throw new Error(`cannot comment unknown element ${id}`);
    }
    this.comments.set(id, text);
  }

  selection(): { node_ids: string[]; edge_ids: string[] } {
    return {
      node_ids: [...this.selectedNodes].sort(),
      edge_ids: [...this.selectedEdges].sort(),
    };
  }

  commentOf(id: string): string | undefined {
    return this.comments.get(id);
  }

  isEmpty(): boolean {
    return this.graph.nodes.length === 0;
  }

  /** Full SVG markup; selected elements carry the annotation yellow. */
  svg(): string {
    if (this.isEmpty()) {
      return '<svg xmlns="http://www.w3.org/2000/svg" width="320" height="80">' +
        '<text x="16" y="44" class="empty">nothing to inspect yet</text></svg>';
    }
    const parts: string[] = [];
    let maxX = 0;
    let maxY = 0;
    for (const p of this.placed.values()) {
      maxX = Math.max(maxX, p.x + NODE_W);
      maxY = Math.max(maxY, p.y + NODE_H);
    }
    for (const edge of this.graph.edges) {
      const a = this.placed.get(edge.src)!;
      const b = this.placed.get(edge.dst)!;
      const x1 = a.x + NODE_W / 2;
      const y1 = a.y + NODE_H;
      const x2 = b.x + NODE_W / 2;
      const y2 = b.y;
      const key = edgeKey(edge.src, edge.dst);
      const stroke = this.selectedEdges.has(key) ? HIGHLIGHT : "#8892a0";
      const width = this.selectedEdges.has(key) ? 3 : 1.5;
      parts.push(
        `<line data-edge="${escapeAttr(key)}" x1="${x1}" y1="${y1}" ` +
          `x2="${x2}" y2="${y2}" stroke="${stroke}" stroke-width="${width}" ` +
          'marker-end="url(#arrow)"/>',
        `<text data-edge-label="${escapeAttr(key)}" x="${(x1 + x2) / 2}" ` +
          `y="${(y1 + y2) / 2 - 4}" class="guard">${escapeXml(edge.guard)}</text>`,
      );
    }
    for (const p of this.placed.values()) {
      const fill = this.selectedNodes.has(p.id) ? HIGHLIGHT : "#dfe7f1";
      parts.push(
        `<g data-node="${escapeAttr(p.id)}">` +
          `<rect x="${p.x}" y="${p.y}" width="${NODE_W}" height="${NODE_H}" ` +
          `rx="8" fill="${fill}" stroke="#3a4450"/>` +
          `<text x="${p.x + NODE_W / 2}" y="${p.y + NODE_H / 2 + 4}" ` +
          `text-anchor="middle" class="label">${escapeXml(p.label)}</text></g>`,
      );
    }
    return (
      `<svg xmlns="http://www.w3.org/2000/svg" width="${maxX + 20}" ` +
      `height="${maxY + 20}"><defs><marker id="arrow" viewBox="0 0 10 10" ` +
      'refX="9" refY="5" markerWidth="7" markerHeight="7" orient="auto">' +
      '<path d="M0,0 L10,5 L0,10 z" fill="#8892a0"/></marker></defs>' +
      parts.join("") +
      "</svg>"
    );
  }
}
