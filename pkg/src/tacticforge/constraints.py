"""Constraint primitives with boolean/field duality and their composition.

Every condition is a tree of AND/OR/NOT over constraint calls. Each call
evaluates to a boolean against the live world state, and most calls can also
be rendered as a spatial field answering "where would this hold for the
subject entity". Field composition: AND multiplies, OR adds, NOT complements.

Leaf field encodings are soft: logistic ramps of length scale EDGE_SCALE
across the constraint boundary, a Gaussian bump for NearPoint, and a shadowed
occlusion cone per opponent for PassingLane (0.05 deep inside, 0.95 outside,
with its own LANE_EDGE ramp across the cone boundary).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.special import expit

from .core import Entity, WorldState, Workspace
from .fields import SpatialField, constant, field_and, field_not, field_or

EDGE_SCALE = 1.0          # meters; logistic ramp length for DistanceTo/SideOf
EQUALITY_TOL = 0.25       # meters; DistanceTo == means |distance - d| <= this
LANE_INSIDE = 0.05        # lane field deep inside an occlusion cone
LANE_OUTSIDE = 0.95       # lane field away from every cone
LANE_EDGE = 0.5           # meters; cone boundary ramp (sharper than EDGE_SCALE
                          # so the shadow saturates even near a close opponent)
NEARPOINT_BOOL_SIGMAS = 2.0

BUILTIN_CONSTRAINTS = (
    "HasPossession", "DistanceTo", "SideOf", "PassingLane", "NearPoint",
)
FIELD_CAPABLE = ("DistanceTo", "SideOf", "PassingLane", "NearPoint")
OPERATORS = ("<", "<=", ">", ">=", "==")
SIDES_BY_AXIS = {"horizontal": ("left", "right"), "vertical": ("above", "below")}


class ConstraintError(ValueError):
    pass


class UnknownEntityError(ConstraintError):
    pass


# ---------------------------------------------------------------------------
# condition expression tree


class CondExpr:
    pass


@dataclass(frozen=True)
class TrueExpr(CondExpr):
    pass


@dataclass(frozen=True)
class Call(CondExpr):
    """A constraint or action API call. Args are atoms: entity/keyword names
    (str), numbers (float), points ((x, y) tuple), operators (str), string
    literals (wrapped in Str), or Sample expressions."""

    name: str
    args: tuple = ()
    line: int = dc_field(default=0, compare=False)
    col: int = dc_field(default=0, compare=False)


@dataclass(frozen=True)
class And(CondExpr):
    left: CondExpr
    right: CondExpr


@dataclass(frozen=True)
class Or(CondExpr):
    left: CondExpr
    right: CondExpr


@dataclass(frozen=True)
class Not(CondExpr):
    item: CondExpr


@dataclass(frozen=True)
class Str:
    """String literal argument."""

    value: str


@dataclass(frozen=True)
class SampleExpr:
    """Argument-position expression: sample a point from a condition's field."""

    cond: CondExpr


# ---------------------------------------------------------------------------
# canonical form


def _fmt_num(x: float) -> str:
    return f"{float(x):.3f}"


def _fmt_arg(a) -> str:
    if isinstance(a, bool):
        return "true" if a else "false"
    if isinstance(a, (int, float)):
        return _fmt_num(a)
    if isinstance(a, tuple):
        return f"({_fmt_num(a[0])},{_fmt_num(a[1])})"
    if isinstance(a, Str):
        return repr(a.value)
    if isinstance(a, SampleExpr):
        return f"sample({canonical_string(a.cond)})"
    return str(a)


def canonical_string(expr: CondExpr) -> str:
    """Deterministic normal form: lowercase operators, flattened and sorted
    AND/OR operand lists, numeric arguments at fixed 3-decimal precision and
    placed after symbolic arguments."""
    if isinstance(expr, TrueExpr):
        return "true"
    if isinstance(expr, Call):
        sym = [a for a in expr.args if not isinstance(a, (int, float)) or isinstance(a, bool)]
        num = [a for a in expr.args if isinstance(a, (int, float)) and not isinstance(a, bool)]
        parts = [_fmt_arg(a) for a in sym] + [_fmt_arg(a) for a in num]
        return f"{expr.name.lower()}({','.join(parts)})"
    if isinstance(expr, Not):
        return f"not({canonical_string(expr.item)})"
    if isinstance(expr, (And, Or)):
        op = "and" if isinstance(expr, And) else "or"
        kind = And if isinstance(expr, And) else Or
        parts: list[str] = []

        def flatten(e: CondExpr) -> None:
            if isinstance(e, kind):
                flatten(e.left)
                flatten(e.right)
            else:
                parts.append(canonical_string(e))

        flatten(expr)
        return f"{op}({','.join(sorted(parts))})"
    raise ConstraintError(f"not a condition expression: {expr!r}")


def leaves(expr: CondExpr) -> list[Call]:
    """Constraint leaves in textual order."""
    if isinstance(expr, Call):
        return [expr]
    if isinstance(expr, Not):
        return leaves(expr.item)
    if isinstance(expr, (And, Or)):
        return leaves(expr.left) + leaves(expr.right)
    return []


# ---------------------------------------------------------------------------
# evaluation context


@dataclass
class EvalContext:
    """World access for constraint evaluation.

    ``custom`` maps non-soccer constraint names to predicates
    ``fn(args, ctx) -> bool`` so other domains can plug their own registries.
    """

    workspace: Workspace
    entities: dict[str, Entity]
    state: WorldState
    custom: dict | None = None

    def resolve(self, name: str, leaf: Call) -> str:
        if name == "self":
            for e in self.entities.values():
                if e.role == "avatar":
                    return e.id
            raise UnknownEntityError(
                f"no avatar entity to resolve 'self' in {canonical_string(leaf)}")
        if name not in self.entities:
            raise UnknownEntityError(
                f"unknown entity id {name!r} in {canonical_string(leaf)}")
        return name

    def pos_of(self, name: str, leaf: Call) -> tuple[float, float]:
        return self.state.pos(self.resolve(name, leaf))


# ---------------------------------------------------------------------------
# boolean evaluation


def eval_bool(expr: CondExpr, ctx: EvalContext) -> bool:
    if isinstance(expr, TrueExpr):
        return True
    if isinstance(expr, And):
        return eval_bool(expr.left, ctx) and eval_bool(expr.right, ctx)
    if isinstance(expr, Or):
        return eval_bool(expr.left, ctx) or eval_bool(expr.right, ctx)
    if isinstance(expr, Not):
        return not eval_bool(expr.item, ctx)
    if isinstance(expr, Call):
        return _eval_leaf(expr, ctx)
    raise ConstraintError(f"not a condition expression: {expr!r}")


def _dist(a: tuple[float, float], b: tuple[float, float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def _eval_leaf(leaf: Call, ctx: EvalContext) -> bool:
    name, args = leaf.name, leaf.args
    if name == "HasPossession":
        ent = ctx.resolve(args[0], leaf)
        return ctx.state.possession == ent
    if name == "DistanceTo":
        obj, ref, d, op = args
        dist = _dist(ctx.pos_of(obj, leaf), ctx.pos_of(ref, leaf))
        if op == "<":
            return bool(dist < d)
        if op == "<=":
            return bool(dist <= d)
        if op == ">":
            return bool(dist > d)
        if op == ">=":
            return bool(dist >= d)
        return bool(abs(dist - d) <= EQUALITY_TOL)
    if name == "SideOf":
        obj, ref, axis, side = args
        ox, oy = ctx.pos_of(obj, leaf)
        rx, ry = ctx.pos_of(ref, leaf)
        if side == "left":
            return bool(ox < rx)
        if side == "right":
            return bool(ox > rx)
        if side == "below":
            return bool(oy < ry)
        return bool(oy > ry)
    if name == "PassingLane":
        passer, receiver, w = args
        return _lane_clear(ctx, passer, receiver, w, leaf)
    if name == "NearPoint":
        obj, point, sigma = args
        return bool(_dist(ctx.pos_of(obj, leaf), point) <= NEARPOINT_BOOL_SIGMAS * sigma)
    if ctx.custom and name in ctx.custom:
        return bool(ctx.custom[name](args, ctx))
    raise ConstraintError(f"unknown constraint {name!r}")


def _opponents_of(ctx: EvalContext, team: str, exclude: set[str]) -> list[Entity]:
    out = []
    for e in ctx.entities.values():
        if e.role == "ball" or e.id in exclude:
            continue
        if e.team != team:
            out.append(e)
    return out


def _point_segment_dist(p, a, b) -> float:
    ax, ay = a
    bx, by = b
    px, py = p
    dx, dy = bx - ax, by - ay
    seg2 = dx * dx + dy * dy
    if seg2 <= 1e-12:
        return math.hypot(px - ax, py - ay)
    t = max(0.0, min(1.0, ((px - ax) * dx + (py - ay) * dy) / seg2))
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


def _lane_clear(ctx: EvalContext, passer: str, receiver: str, w: float, leaf: Call) -> bool:
    pid = ctx.resolve(passer, leaf)
    rid = ctx.resolve(receiver, leaf)
    a = ctx.state.pos(pid)
    b = ctx.state.pos(rid)
    team = ctx.entities[pid].team
    for opp in _opponents_of(ctx, team, exclude={pid, rid}):
        if _point_segment_dist(ctx.state.pos(opp.id), a, b) <= w / 2.0 + opp.radius:
            return False
    return True


# ---------------------------------------------------------------------------
# field evaluation


def _grid(ws: Workspace) -> tuple[np.ndarray, np.ndarray]:
    xs = ws.x_min + (np.arange(ws.cols) + 0.5) * ws.cell_w
    ys = ws.y_min + (np.arange(ws.rows) + 0.5) * ws.cell_h
    return np.meshgrid(xs, ys)


def field(expr: CondExpr, ctx: EvalContext) -> SpatialField:
    """Render a condition as an (un-normalized) field over the workspace."""
    ws = ctx.workspace
    if isinstance(expr, TrueExpr):
        return constant(ws, 1.0)
    if isinstance(expr, And):
        return field_and(field(expr.left, ctx), field(expr.right, ctx))
    if isinstance(expr, Or):
        return field_or(field(expr.left, ctx), field(expr.right, ctx))
    if isinstance(expr, Not):
        return field_not(field(expr.item, ctx))
    if isinstance(expr, Call):
        return _leaf_field(expr, ctx)
    raise ConstraintError(f"not a condition expression: {expr!r}")


def _leaf_field(leaf: Call, ctx: EvalContext) -> SpatialField:
    name, args = leaf.name, leaf.args
    ws = ctx.workspace
    if name not in FIELD_CAPABLE:
        raise ConstraintError(
            f"field evaluation of a boolean-only constraint: {canonical_string(leaf)}")
    X, Y = _grid(ws)
    if name == "DistanceTo":
        _obj, ref, d, op = args
        rx, ry = ctx.pos_of(ref, leaf)
        D = np.hypot(X - rx, Y - ry)
        if op in ("<", "<="):
            v = expit((d - D) / EDGE_SCALE)
        elif op in (">", ">="):
            v = expit((D - d) / EDGE_SCALE)
        else:
            v = expit((EQUALITY_TOL - np.abs(D - d)) / EDGE_SCALE)
        return SpatialField(ws, v)
    if name == "SideOf":
        _obj, ref, axis, side = args
        rx, ry = ctx.pos_of(ref, leaf)
        if side == "left":
            v = expit((rx - X) / EDGE_SCALE)
        elif side == "right":
            v = expit((X - rx) / EDGE_SCALE)
        elif side == "below":
            v = expit((ry - Y) / EDGE_SCALE)
        else:
            v = expit((Y - ry) / EDGE_SCALE)
        return SpatialField(ws, v)
    if name == "NearPoint":
        _obj, point, sigma = args
        px, py = point
        v = np.exp(-((X - px) ** 2 + (Y - py) ** 2) / (2.0 * sigma * sigma))
        return SpatialField(ws, v)
    # PassingLane: receiver-placement field, shadowing each opponent's
    # occlusion cone as seen from the passer.
    passer, _receiver, w = args
    pid = ctx.resolve(passer, leaf)
    px, py = ctx.state.pos(pid)
    team = ctx.entities[pid].team
    rid = ctx.resolve(_receiver, leaf)
    opponents = _opponents_of(ctx, team, exclude={pid, rid})
    v = np.full((ws.rows, ws.cols), LANE_OUTSIDE)
    dist_cell = np.hypot(X - px, Y - py)
    theta_cell = np.arctan2(Y - py, X - px)
    for opp in opponents:
        ox, oy = ctx.state.pos(opp.id)
        d_opp = math.hypot(ox - px, oy - py)
        if d_opp < 1e-9:
            continue
        half_width = math.atan((opp.radius + w / 2.0) / d_opp)
        theta_opp = math.atan2(oy - py, ox - px)
        dtheta = np.abs(np.angle(np.exp(1j * (theta_cell - theta_opp))))
        arc_excess = (dtheta - half_width) * dist_cell  # meters outside the cone edge
        radial_excess = dist_cell - d_opp               # meters beyond the opponent
        inside = expit(-arc_excess / LANE_EDGE) * expit(radial_excess / LANE_EDGE)
        v = np.minimum(v, LANE_OUTSIDE - (LANE_OUTSIDE - LANE_INSIDE) * inside)
    return SpatialField(ws, v)
