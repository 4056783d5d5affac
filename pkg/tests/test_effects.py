import numpy as np
import pytest

from condsub.data import from_arrays
from condsub.effects import (EffectCurve, ale, boxplot_summary, cs_pdp,
                             curves_to_csv, curves_to_svg, make_grid, pdp,
                             pooled_weighted_average)
from condsub.models import FunctionModel
from condsub.subgroups import fit_partition, single_group_partition
from tests.conftest import exp_model, triangle_pair


def _const_model(c=3.5):
    return FunctionModel(lambda cols: np.full(len(cols["x1"]), c), ["x1"])


def test_pdp_constant_model_flat():
    d = triangle_pair(200, seed=0)
    curve = pdp(_const_model(), d, "x1")
    np.testing.assert_array_equal(curve.values, np.full(len(curve.grid), 3.5))


def test_pdp_extrapolates_beyond_observed_max():
    d = triangle_pair(3000, seed=1)
    model = exp_model()
    max_obs = model.predict(d).max()
    curve = pdp(model, d, "x1", grid=np.array([0.9]))
    assert max_obs <= np.e + 1e-9
    assert curve.values[0] > max_obs


def test_pdp_additive_slope_recovered():
    rng = np.random.default_rng(2)
    n = 500
    d = from_arrays(["x1", "x2"], [rng.uniform(0, 1, n), rng.standard_normal(n)])
    beta = 2.75
    model = FunctionModel(lambda c: beta * c["x1"] + np.sin(c["x2"]), ["x1", "x2"])
    curve = pdp(model, d, "x1")
    slope = np.polyfit(curve.grid, curve.values, 1)[0]
    assert abs(slope - beta) < 1e-6


def test_pdp_categorical_one_value_per_level():
    rng = np.random.default_rng(3)
    n = 100
    d = from_arrays(["x1", "c"], [rng.standard_normal(n),
                                  rng.choice(["a", "b", "c"], n)])
    model = FunctionModel(lambda cols: cols["c"] * 10.0, ["c"])
    curve = pdp(model, d, "c")
    assert curve.categorical_levels == ("a", "b", "c")
    np.testing.assert_allclose(curve.values, [0.0, 10.0, 20.0])


def test_cs_pdp_single_group_equals_pdp():
    d = triangle_pair(400, seed=4)
    part = single_group_partition(d, "x1")
    model = exp_model()
    curves = cs_pdp(model, part, d)
    base = pdp(model, d, "x1", grid=curves[0].grid)
    assert len(curves) == 1
    np.testing.assert_array_equal(curves[0].values, base.values)


def test_cs_pdp_flat_slopes_distinct_intercepts():
    # y depends only on x1, but x1 and x2 are correlated; subgroup curves
    # for x2 should be flat at different levels
    rng = np.random.default_rng(5)
    n = 3000
    x1 = rng.standard_normal(n)
    x2 = (x1 + rng.standard_normal(n)) / np.sqrt(2)
    d = from_arrays(["x1", "x2"], [x1, x2])
    model = FunctionModel(lambda c: c["x1"], ["x1"])
    part = fit_partition(d, "x2", max_depth=1)
    curves = cs_pdp(model, part, d)
    assert len(curves) == 2
    intercepts = []
    for c in curves:
        slope, intercept = np.polyfit(c.grid, c.values, 1)
        assert abs(slope) < 0.05
        intercepts.append(intercept)
    assert abs(intercepts[0] - intercepts[1]) > 0.5


def test_cs_pdp_grid_restricted_to_group_support():
    d = triangle_pair(2000, seed=6)
    part = fit_partition(d, "x2", max_depth=2)
    curves = cs_pdp(exp_model(), part, d)
    from condsub.subgroups import assign_groups
    ids = assign_groups(part, d)
    for c in curves:
        x = d.columns["x2"][ids == c.group_id]
        assert c.grid.min() >= x.min() - 1e-12
        assert c.grid.max() <= x.max() + 1e-12


def test_cs_pdp_categorical_feature_within_numeric_partition():
    rng = np.random.default_rng(7)
    n = 2000
    temp = rng.uniform(0, 30, n)
    season = rng.choice(["w", "sp", "su", "f"], n)
    d = from_arrays(["temp", "season"], [temp, season])
    lookup = {"f": 1.0, "sp": 2.0, "su": 3.0, "w": 4.0}
    levels = sorted(lookup)

    def f(cols):
        season_effect = np.array([lookup[levels[int(i)]] for i in cols["season"]])
        return season_effect * np.maximum(0.0, 15.0 - cols["temp"]) / 5.0

    model = FunctionModel(f, ["temp", "season"])

    # partition on temp, inspect the categorical season effect per group
    part = fit_partition(d, "temp", max_depth=1, min_node_size=200)
    curves = cs_pdp(model, part, d, feature="season")
    from condsub.subgroups import assign_groups
    ids = assign_groups(part, d)
    ranges = {c.group_id: np.ptp(c.values) for c in curves}
    low_group = min(curves, key=lambda c: temp[ids == c.group_id].mean())
    # low-temperature group shows larger between-level differences
    assert ranges[low_group.group_id] == max(ranges.values())


def test_ale_constant_model_flat():
    d = triangle_pair(300, seed=8)
    curve = ale(_const_model(), d, d, "x1", n_intervals=5)
    np.testing.assert_allclose(curve.values, 3.5, atol=1e-12)


def test_ale_matches_pdp_under_independence():
    rng = np.random.default_rng(9)
    n = 4000
    d = from_arrays(["x1", "x2"], [rng.uniform(0, 1, n), rng.standard_normal(n)])
    model = FunctionModel(lambda c: 2 * c["x1"] + np.tanh(c["x2"]), ["x1", "x2"])
    a = ale(model, d, d, "x1", n_intervals=20)
    p = pdp(model, d, "x1", grid=a.grid)
    np.testing.assert_allclose(a.values, p.values, atol=0.05)


def test_ale_merges_duplicate_edges():
    x = np.repeat([0.0, 1.0, 2.0], 50)
    rng = np.random.default_rng(10)
    d = from_arrays(["x1", "x2"], [x, rng.standard_normal(150)])
    model = FunctionModel(lambda c: c["x1"], ["x1"])
    curve = ale(model, d, d, "x1", n_intervals=20)
    assert len(curve.grid) == 3


def test_boxplot_single_value():
    curve = EffectCurve("x1", "pdp", np.array([1.0]), np.array([2.0]),
                        support=(1.0, 1.0), n_rows=1)
    out = boxplot_summary(curve, np.array([1.0]))
    assert out.q25 == out.q75 == 1.0
    assert out.whisker_lo == out.whisker_hi == 1.0


def test_boxplot_type7_quantiles():
    x = np.arange(1.0, 101.0)
    curve = EffectCurve("x1", "pdp", np.array([0.0, 200.0]),
                        np.array([0.0, 0.0]), support=(1.0, 100.0), n_rows=100)
    out = boxplot_summary(curve, x)
    assert out.q25 == 25.75
    assert out.q75 == 75.25
    assert out.whisker_lo >= 1.0 and out.whisker_hi <= 100.0
    assert 200.0 in out.outlier_grid and 0.0 in out.outlier_grid


def test_boxplot_whiskers_capped():
    x = np.array([5.0, 5.1, 5.2])
    curve = EffectCurve("x1", "pdp", np.array([5.0, 5.2]), np.zeros(2),
                        support=(5.0, 5.2), n_rows=3)
    out = boxplot_summary(curve, x)
    assert out.whisker_lo >= 5.0
    assert out.whisker_hi <= 5.2


def test_pdp_ignoring_feature_bit_identical_constant():
    d = triangle_pair(250, seed=11)
    model = FunctionModel(lambda c: np.sin(c["x2"]), ["x2"])
    curve = pdp(model, d, "x1")
    assert np.all(curve.values == curve.values[0])


def test_weighted_average_of_subgroup_curves_matches_pooled():
    d = triangle_pair(2000, seed=12)
    part = fit_partition(d, "x2", max_depth=1)
    model = exp_model()
    x = float(np.median(d.columns["x2"]))
    grid = np.array([x])
    curves = cs_pdp(model, part, d, grid=grid)
    assert all(len(c.grid) == 1 for c in curves)
    pooled = pdp(model, d, "x2", grid=grid)
    got = pooled_weighted_average(curves, x)
    assert abs(got - pooled.values[0]) < 1e-12


def test_csv_and_svg_serialization():
    d = triangle_pair(500, seed=13)
    part = fit_partition(d, "x2", max_depth=1)
    curves = cs_pdp(exp_model(), part, d)
    curves = [boxplot_summary(c, d.columns["x2"]) for c in curves]
    text = curves_to_csv(curves)
    lines = text.strip().splitlines()
    assert lines[0] == "feature,kind,grid,value,group_id,rule"
    assert len(lines) == 1 + sum(len(c.grid) for c in curves)
    svg = curves_to_svg(curves)
    assert svg.count("<polyline") == len(curves)
    assert svg.startswith("<svg")
