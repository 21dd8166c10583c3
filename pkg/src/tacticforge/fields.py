"""Discretized non-negative fields over the workspace and their composition.

A field assigns a non-negative weight to every grid cell. Logical composition
is pointwise: AND multiplies, OR adds, NOT takes one-minus (only defined while
the operand stays within [0, 1]). Normalizing turns a field into a probability
distribution that can be sampled for concrete positions.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Workspace

NORMALIZE_TOL = 1e-9


class FieldError(ValueError):
    pass


@dataclass(frozen=True)
class SpatialField:
    workspace: Workspace
    values: np.ndarray  # shape (rows, cols), non-negative, finite
    normalized: bool = False

    def __post_init__(self) -> None:
        v = self.values
        if v.shape != (self.workspace.rows, self.workspace.cols):
            raise FieldError(
                f"field shape {v.shape} does not match workspace grid "
                f"({self.workspace.rows}, {self.workspace.cols})"
            )
        if not np.all(np.isfinite(v)):
            raise FieldError("field values must be finite")
        if np.any(v < 0):
            raise FieldError("field values must be non-negative")
        if self.normalized and abs(float(v.sum()) - 1.0) > NORMALIZE_TOL:
            raise FieldError("normalized field must sum to 1")

    @property
    def max(self) -> float:
        return float(self.values.max())


def constant(ws: Workspace, value: float) -> SpatialField:
    return SpatialField(ws, np.full((ws.rows, ws.cols), float(value)))


def field_and(a: SpatialField, b: SpatialField) -> SpatialField:
    return SpatialField(a.workspace, a.values * b.values)


def field_or(a: SpatialField, b: SpatialField) -> SpatialField:
    return SpatialField(a.workspace, a.values + b.values)


def field_not(a: SpatialField) -> SpatialField:
    if a.max > 1.0 + 1e-9:
        raise FieldError("complement undefined over super-unit field")
    return SpatialField(a.workspace, np.clip(1.0 - a.values, 0.0, None))


def normalize(f: SpatialField) -> SpatialField:
    """Scale so values sum to 1, preserving proportions."""
    total = float(f.values.sum())
    if total <= 0.0:
        raise FieldError("unsatisfiable constraint field")
    return SpatialField(f.workspace, f.values / total, normalized=True)


def sample(f: SpatialField, rng) -> tuple[float, float]:
    """Draw a point: pick a cell by mass, then jitter uniformly inside it.

    ``rng`` is an integer seed or a numpy Generator. Deterministic per seed.
    """
    if not f.normalized:
        raise FieldError("sample requires a normalized field")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    flat = f.values.ravel()
    cum = np.cumsum(flat)
    u = rng.random()
    idx = int(np.searchsorted(cum, u * cum[-1], side="right"))
    idx = min(idx, flat.size - 1)
    r, c = divmod(idx, f.workspace.cols)
    ws = f.workspace
    x = ws.x_min + (c + rng.random()) * ws.cell_w
    y = ws.y_min + (r + rng.random()) * ws.cell_h
    return x, y


def to_csv(f: SpatialField) -> str:
    """Row-major CSV dump (row 0 = y_min edge)."""
    lines = [",".join(repr(float(v)) for v in row) for row in f.values]
    return "\n".join(lines) + "\n"


def to_heatmap_dict(f: SpatialField) -> dict:
    return {
        "cols": f.workspace.cols,
        "rows": f.workspace.rows,
        "values": [[float(v) for v in row] for row in f.values],
    }
