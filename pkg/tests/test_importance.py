import numpy as np
import pytest

from condsub.data import from_arrays
from condsub.errors import DataError
from condsub.importance import cs_pfi, depth_sweep, ground_truth_cpfi, pfi
from condsub.models import SQUARED_ERROR, FunctionModel
from condsub.simulation import ScenarioSpec, generate, true_model
from condsub.subgroups import fit_partition, single_group_partition
from tests.conftest import bimodal_pair


def _ident_model(name="x1"):
    return FunctionModel(lambda c: c[name], [name])


def test_ignored_feature_near_zero():
    rng = np.random.default_rng(0)
    n = 2000
    d = from_arrays(["x1", "x2"],
                    [rng.standard_normal(n), rng.standard_normal(n)],
                    target=rng.standard_normal(n))
    model = _ident_model("x2")
    value, per_rep = pfi(model, d, "x1", SQUARED_ERROR, M=10, seed=1)
    se = np.std(per_rep, ddof=1) / np.sqrt(len(per_rep))
    assert abs(value) <= 3 * max(se, 1e-12)


def test_identity_model_pfi_is_twice_variance():
    rng = np.random.default_rng(1)
    x1 = rng.standard_normal(5000)
    d = from_arrays(["x1"], [x1], target=x1.copy())
    value, _ = pfi(_ident_model(), d, "x1", SQUARED_ERROR, M=10, seed=2)
    assert abs(value - 2 * np.var(x1)) < 0.15


def test_linear_scenario_marginal_overestimates():
    spec = ScenarioSpec("linear", n=3000, seed=3)
    d = generate(spec)
    model = true_model()
    m_pfi, _ = pfi(model, d, "x1", SQUARED_ERROR, M=5, seed=4)
    gt = ground_truth_cpfi(spec, model, SQUARED_ERROR, n_eval=40_000, M=5, seed=5)
    train = generate(ScenarioSpec("linear", n=3000, seed=99))
    part = fit_partition(train.drop_target(), "x1", max_depth=30)
    cs = cs_pfi(model, part, d, SQUARED_ERROR, M=5, seed=4).aggregate_cs_pfi
    # marginal permutation badly overestimates under dependence; the
    # subgroup estimate lands close to the conditional ground truth
    assert 25 < (m_pfi - gt) ** 2 < 50
    assert (m_pfi - gt) ** 2 > 10 * (cs - gt) ** 2


def test_cs_single_group_equals_marginal_exactly():
    d = bimodal_pair(600, seed=6, with_target=True)
    model = _ident_model()
    part = single_group_partition(d.drop_target(), "x1")
    res = cs_pfi(model, part, d, SQUARED_ERROR, M=4, seed=7)
    m_value, _ = pfi(model, d, "x1", SQUARED_ERROR, M=4, seed=7)
    assert res.aggregate_cs_pfi == m_value
    assert res.marginal_pfi == m_value


def test_aggregate_is_weighted_sum_bit_for_bit():
    d = bimodal_pair(1200, seed=8, with_target=True)
    model = _ident_model()
    part = fit_partition(d.drop_target(), "x1", max_depth=3, min_node_size=30)
    res = cs_pfi(model, part, d, SQUARED_ERROR, M=5, seed=9)
    n = sum(g.n_test for g in res.per_group)
    acc = 0.0
    for g in sorted(res.per_group, key=lambda g: g.group_id):
        if g.n_test:
            acc += (g.n_test / n) * g.cs_pfi
    assert acc == res.aggregate_cs_pfi


def test_empty_test_group_gets_nan_and_zero_weight():
    train = bimodal_pair(2000, seed=10)
    part = fit_partition(train, "x1", max_depth=1)
    thr = part.tree.root.threshold
    rng = np.random.default_rng(11)
    # test rows all on one side of the split
    x2 = rng.uniform(0, thr * 0.9, 300)
    x1 = rng.standard_normal(300)
    test = from_arrays(["x1", "x2"], [x1, x2], target=x1.copy())
    res = cs_pfi(_ident_model(), part, test, SQUARED_ERROR, M=3, seed=12)
    empty = [g for g in res.per_group if g.n_test == 0]
    assert len(empty) == 1 and np.isnan(empty[0].cs_pfi)
    assert np.isfinite(res.aggregate_cs_pfi)


def test_ground_truth_independent_matches_marginal():
    spec = ScenarioSpec("independent", n=4000, seed=13)
    d = generate(spec)
    model = true_model()
    m_value, per_rep = pfi(model, d, "x1", SQUARED_ERROR, M=10, seed=14)
    gt = ground_truth_cpfi(spec, model, SQUARED_ERROR, n_eval=10_000, M=10, seed=15)
    se = np.std(per_rep, ddof=1) / np.sqrt(len(per_rep))
    # generous combined-error budget: two independent Monte Carlo estimates
    assert abs(m_value - gt) < 3 * se + 0.05 * gt


def test_ground_truth_stable_across_seeds():
    spec = ScenarioSpec("linear", n=2000, seed=16)
    model = true_model()
    a = ground_truth_cpfi(spec, model, SQUARED_ERROR, n_eval=40_000, M=10, seed=17)
    b = ground_truth_cpfi(spec, model, SQUARED_ERROR, n_eval=40_000, M=10, seed=18)
    assert abs(a - b) / a < 0.02


def test_depth_sweep_depth0_is_marginal():
    d = bimodal_pair(800, seed=19, with_target=True)
    model = _ident_model()
    rows = depth_sweep(model, d.drop_target(), d, "x1", depths=[0, 1, 2],
                       loss=SQUARED_ERROR, M=4, seed=20)
    m_value, _ = pfi(model, d, "x1", SQUARED_ERROR, M=4, seed=20)
    assert rows[0]["depth"] == 0
    assert rows[0]["cs_pfi"] == m_value
    assert rows[0]["n_groups"] == 1
    assert rows[1]["n_groups"] >= 1


def test_depth_sweep_biggest_change_early():
    # dependent-feature setting: conditional correction happens by depth 2
    spec = ScenarioSpec("nonlinear", n=3000, seed=21)
    d = generate(spec)
    model = true_model()
    rows = depth_sweep(model, d.drop_target(), d, "x1", depths=[0, 2, 4],
                       loss=SQUARED_ERROR, M=5, seed=22)
    vals = {r["depth"]: r["cs_pfi"] for r in rows}
    assert abs(vals[2] - vals[0]) >= abs(vals[4] - vals[2])


def test_doubling_m_does_not_increase_spread():
    d = bimodal_pair(500, seed=23, with_target=True)
    model = _ident_model()

    def spread(M):
        vals = [cs_pfi(model,
                       fit_partition(d.drop_target(), "x1", max_depth=1),
                       d, SQUARED_ERROR, M=M, seed=s).aggregate_cs_pfi
                for s in range(40)]
        return np.var(vals)

    assert spread(8) <= spread(4) * 1.05


def test_row_shuffle_statistical_invariance():
    d = bimodal_pair(3000, seed=24, with_target=True)
    perm = np.random.default_rng(25).permutation(d.n_rows)
    shuffled = d.take(perm)
    model = _ident_model()
    a, rep_a = pfi(model, d, "x1", SQUARED_ERROR, M=20, seed=26)
    b, rep_b = pfi(model, shuffled, "x1", SQUARED_ERROR, M=20, seed=26)
    se = np.std(np.concatenate([rep_a, rep_b]), ddof=1) / np.sqrt(20)
    assert abs(a - b) < 4 * se


def test_pfi_requires_target_and_positive_m():
    d = bimodal_pair(100, seed=27)
    with pytest.raises(DataError):
        pfi(_ident_model(), d, "x1", SQUARED_ERROR, M=3, seed=0)
    d = bimodal_pair(100, seed=27, with_target=True)
    with pytest.raises(DataError):
        pfi(_ident_model(), d, "x1", SQUARED_ERROR, M=0, seed=0)


def test_result_json_round_trip_fields():
    import json
    d = bimodal_pair(400, seed=28, with_target=True)
    part = fit_partition(d.drop_target(), "x1", max_depth=1)
    res = cs_pfi(_ident_model(), part, d, SQUARED_ERROR, M=3, seed=29)
    payload = json.loads(res.to_json())
    assert payload["feature"] == "x1"
    assert payload["M"] == 3
    assert len(payload["groups"]) == len(res.per_group)
    assert payload["aggregate_cs_pfi"] == res.aggregate_cs_pfi
