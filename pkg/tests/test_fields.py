import numpy as np
import pytest

from tacticforge.core import Workspace, default_workspace
from tacticforge.fields import (
    FieldError, SpatialField, constant, field_and, field_not, field_or,
    normalize, sample, to_csv, to_heatmap_dict,
)


def tiny_ws(cols=2, rows=2):
    return Workspace(0.0, float(cols), 0.0, float(rows), cols, rows)


def make_field(ws, values):
    return SpatialField(ws, np.asarray(values, dtype=float))


class TestInvariants:
    def test_shape_mismatch_rejected(self):
        with pytest.raises(FieldError):
            SpatialField(tiny_ws(), np.ones((3, 3)))

    def test_negative_rejected(self):
        with pytest.raises(FieldError):
            make_field(tiny_ws(), [[1.0, -0.1], [0.0, 0.0]])

    def test_nan_rejected(self):
        with pytest.raises(FieldError):
            make_field(tiny_ws(), [[1.0, float("nan")], [0.0, 0.0]])

    def test_normalized_flag_checked(self):
        with pytest.raises(FieldError):
            SpatialField(tiny_ws(), np.ones((2, 2)), normalized=True)


class TestAlgebra:
    def test_and_is_pointwise_product(self):
        ws = tiny_ws()
        a = make_field(ws, [[0.5, 1.0], [0.0, 1.0]])
        b = make_field(ws, [[0.5, 0.5], [1.0, 0.0]])
        out = field_and(a, b)
        assert np.allclose(out.values, [[0.25, 0.5], [0.0, 0.0]])

    def test_or_is_pointwise_sum(self):
        ws = tiny_ws()
        a = make_field(ws, [[0.5, 1.0], [0.0, 1.0]])
        b = make_field(ws, [[0.5, 0.5], [1.0, 0.0]])
        out = field_or(a, b)
        assert np.allclose(out.values, [[1.0, 1.5], [1.0, 1.0]])

    def test_not_of_all_ones_is_zero(self):
        out = field_not(constant(tiny_ws(), 1.0))
        assert np.allclose(out.values, 0.0)

    def test_not_rejects_super_unit(self):
        ws = tiny_ws()
        over = field_or(constant(ws, 0.8), constant(ws, 0.8))
        with pytest.raises(FieldError, match="complement undefined"):
            field_not(over)


class TestNormalize:
    def test_proportions_preserved(self):
        ws = tiny_ws()
        f = normalize(make_field(ws, [[1.0, 3.0], [0.0, 0.0]]))
        assert np.allclose(f.values, [[0.25, 0.75], [0.0, 0.0]])
        assert f.normalized

    def test_idempotent(self):
        ws = tiny_ws()
        rng = np.random.default_rng(0)
        f = normalize(SpatialField(ws, rng.random((2, 2))))
        g = normalize(f)
        assert np.max(np.abs(f.values - g.values)) < 1e-12

    def test_all_zero_rejected(self):
        with pytest.raises(FieldError, match="unsatisfiable constraint field"):
            normalize(constant(tiny_ws(), 0.0))


class TestSample:
    def test_delta_field_hits_its_cell(self):
        ws = default_workspace()
        v = np.zeros((ws.rows, ws.cols))
        v[7, 11] = 1.0
        f = normalize(SpatialField(ws, v))
        for seed in (0, 1, 99):
            x, y = sample(f, seed)
            assert ws.cell_of(x, y) == (7, 11)

    def test_two_cell_split_is_binomial(self):
        ws = tiny_ws()
        f = normalize(make_field(ws, [[1.0, 1.0], [0.0, 0.0]]))
        rng = np.random.default_rng(7)
        left = sum(1 for _ in range(10_000) if sample(f, rng)[0] < 1.0)
        assert abs(left - 5000) <= 300  # 6 sigma for p=0.5, n=10000

    def test_fixed_seed_reproducible(self):
        ws = default_workspace()
        f = normalize(constant(ws, 1.0))
        assert sample(f, 42) == sample(f, 42)

    def test_unnormalized_rejected(self):
        with pytest.raises(FieldError):
            sample(constant(tiny_ws(), 1.0), 0)

    def test_points_always_inside_workspace(self):
        ws = default_workspace()
        f = normalize(constant(ws, 1.0))
        rng = np.random.default_rng(3)
        for _ in range(500):
            x, y = sample(f, rng)
            assert ws.contains(x, y)


class TestExport:
    def test_csv_row_major(self):
        ws = Workspace(0, 2, 0, 2, 2, 2)
        f = make_field(ws, [[1.0, 2.0], [3.0, 4.0]])
        assert to_csv(f) == "1.0,2.0\n3.0,4.0\n"

    def test_heatmap_shape(self):
        ws = tiny_ws()
        d = to_heatmap_dict(constant(ws, 0.5))
        assert d["cols"] == 2 and d["rows"] == 2
        assert d["values"][0][0] == 0.5
