"""Decision-flow graphs for inspection, plus the two alignment metrics.

The flow view of a compiled machine keeps every state as a node (canonical
label) and every guard edge as a labeled edge; interrupt conditions appear as
extra edges labeled by their condition. Node/edge descriptions come from the
Speak narration that rides the transition into each state.

Metrics: correctness normalizes a rubric score to a percentage; completeness
is recall of ground-truth nodes and edges in the system flow, with node
identity decided purely by canonical label (optionally routed through an
alias map), so extra system elements never penalize.
"""
from __future__ import annotations

from dataclasses import dataclass

from tacticforge.constraints import TrueExpr, canonical_string
from tacticforge.fsm import Fsm, FsmEdge


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class FlowNode:
    id: str
    label: str
    desc: str = ""


@dataclass(frozen=True)
class FlowEdge:
    src: str
    dst: str
    guard: str
    desc: str = ""


@dataclass(frozen=True)
class DecisionFlowGraph:
    nodes: tuple[FlowNode, ...]
    edges: tuple[FlowEdge, ...]

    def __post_init__(self) -> None:
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise MetricsError("flow node ids must be unique")
        known = set(ids)
        for e in self.edges:
            if e.src not in known or e.dst not in known:
                raise MetricsError(f"edge {e.src}->{e.dst} references unknown node")

    def node_labels(self) -> dict[str, str]:
        return {n.id: n.label for n in self.nodes}


# ---------------------------------------------------------------------------
# extraction


def _speak_desc(speaks: tuple) -> str:
    return " ".join(text for text, _line in speaks)


def extract_flow(fsm: Fsm, minimize: bool = False) -> DecisionFlowGraph:
    states = dict(fsm.states)
    edges: list[FsmEdge] = list(fsm.edges)
    entry = fsm.entry

    if minimize:
        states, edges, entry = _minimize(states, edges, entry)

    descs: dict[str, list[str]] = {sid: [] for sid in states}
    if fsm.entry_speaks and entry in descs:
        descs[entry].append(_speak_desc(fsm.entry_speaks))
    for e in edges:
        if e.speaks and e.dst in descs:
            text = _speak_desc(e.speaks)
            if text not in descs[e.dst]:
                descs[e.dst].append(text)

    nodes = []
    for sid, st in states.items():
        desc = " / ".join(d for d in descs[sid] if d) or st.label
        nodes.append(FlowNode(sid, st.label, desc))

    flow_edges = []
    seen = set()
    for e in edges:
        key = (e.src, e.dst, canonical_string(e.guard))
        if key in seen:
            continue
        seen.add(key)
        flow_edges.append(FlowEdge(e.src, e.dst, key[2], _speak_desc(e.speaks)))
    # interrupt conditions surface as extra edges alongside the completion path
    for sid, st in states.items():
        if st.kind == "action" and st.interrupt is not None:
            outs = [e for e in edges if e.src == sid]
            if outs:
                key = (sid, outs[0].dst, canonical_string(st.interrupt))
                if key not in seen:
                    seen.add(key)
                    flow_edges.append(FlowEdge(sid, outs[0].dst, key[2], "interrupt"))

    nodes.sort(key=lambda n: (n.label, n.id))
    flow_edges.sort(key=lambda e: (e.src, e.dst, e.guard))
    return DecisionFlowGraph(tuple(nodes), tuple(flow_edges))


def _minimize(states: dict, edges: list, entry: str):
    """Drop dead guard edges, bypass pass-through decision states, and prune
    unreachable states. Actions are never merged away."""
    def out_of(sid):
        return sorted((e for e in edges if e.src == sid), key=lambda e: e.order)

    # 1. edges after an always-true edge can never fire
    pruned: list[FsmEdge] = []
    for sid in states:
        outs = out_of(sid)
        keep: list[FsmEdge] = []
        for e in outs:
            keep.append(e)
            if isinstance(e.guard, TrueExpr):
                break
        pruned.extend(keep)
    edges = [e for e in edges if e in pruned]

    # 2. a decision whose only outgoing edge is unconditional adds nothing
    changed = True
    while changed:
        changed = False
        for sid, st in list(states.items()):
            if st.kind != "decision":
                continue
            outs = out_of(sid)
            if len(outs) != 1 or not isinstance(outs[0].guard, TrueExpr):
                continue
            succ = outs[0].dst
            if succ == sid:
                continue
            forward = outs[0]
            new_edges = []
            for e in edges:
                if e is forward:
                    continue
                if e.dst == sid:
                    e = FsmEdge(e.src, succ, e.guard, e.speaks + forward.speaks,
                                e.order)
                if e.src == sid:
                    continue
                new_edges.append(e)
            edges = new_edges
            if entry == sid:
                entry = succ
            del states[sid]
            changed = True
            break

    # 3. unreachable states
    reachable = {entry}
    frontier = [entry]
    while frontier:
        cur = frontier.pop()
        for e in edges:
            if e.src == cur and e.dst not in reachable:
                reachable.add(e.dst)
                frontier.append(e.dst)
    states = {sid: st for sid, st in states.items() if sid in reachable}
    edges = [e for e in edges if e.src in reachable and e.dst in reachable]
    return states, edges, entry


# ---------------------------------------------------------------------------
# metrics


@dataclass(frozen=True)
class Rubric:
    statements: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.statements:
            raise MetricsError("rubric needs at least one statement")

    @property
    def s_max(self) -> int:
        return 2 * len(self.statements)


@dataclass(frozen=True)
class RubricScore:
    rubric: Rubric
    values: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.values) != len(self.rubric.statements):
            raise MetricsError("one value per rubric statement required")
        if any(v not in (0, 1, 2) for v in self.values):
            raise MetricsError("rubric values must be 0, 1, or 2")

    @property
    def total(self) -> int:
        return sum(self.values)


def correctness(score: RubricScore) -> float:
    s_max = score.rubric.s_max
    if s_max == 0:
        raise MetricsError("empty rubric has no maximum score")
    return score.total / s_max * 100.0


def completeness(g_sys: DecisionFlowGraph, g_gt: DecisionFlowGraph,
                 aliases: dict | None = None) -> float:
    """Recall of ground-truth nodes and edges in the system flow."""
    aliases = aliases or {}

    def norm(label: str) -> str:
        return aliases.get(label, label)

    def node_set(g: DecisionFlowGraph) -> set:
        return {norm(n.label) for n in g.nodes}

    def edge_set(g: DecisionFlowGraph) -> set:
        labels = g.node_labels()
        return {
            (norm(labels[e.src]), norm(labels[e.dst]), norm(e.guard))
            for e in g.edges
        }

    v_gt, e_gt = node_set(g_gt), edge_set(g_gt)
    if not v_gt and not e_gt:
        raise MetricsError("empty ground-truth flow")
    v_sys, e_sys = node_set(g_sys), edge_set(g_sys)
    hit = len(v_sys & v_gt) + len(e_sys & e_gt)
    return hit / (len(v_gt) + len(e_gt)) * 100.0


# ---------------------------------------------------------------------------
# export


def export_json_dict(g: DecisionFlowGraph) -> dict:
    return {
        "nodes": [{"id": n.id, "label": n.label, "desc": n.desc} for n in g.nodes],
        "edges": [
            {"src": e.src, "dst": e.dst, "guard": e.guard, "desc": e.desc}
            for e in g.edges
        ],
    }


def flow_from_dict(d: dict) -> DecisionFlowGraph:
    return DecisionFlowGraph(
        tuple(FlowNode(n["id"], n["label"], n.get("desc", "")) for n in d["nodes"]),
        tuple(FlowEdge(e["src"], e["dst"], e["guard"], e.get("desc", ""))
              for e in d["edges"]),
    )


def _q(text: str) -> str:
    return '"' + text.replace('"', '\\"') + '"'


def export_dot(g: DecisionFlowGraph) -> str:
    lines = ["digraph flow {"]
    for n in g.nodes:
        lines.append(f"  {_q(n.id)} [label={_q(n.label)}];")
    for e in g.edges:
        lines.append(f"  {_q(e.src)} -> {_q(e.dst)} [label={_q(e.guard)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
