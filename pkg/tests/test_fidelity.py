import numpy as np
import pytest

from condsub.data import from_arrays
from condsub.effects import cs_pdp, pdp
from condsub.errors import DataError
from condsub.fidelity import (KernelConfig, data_fidelity,
                              data_fidelity_experiment, mmd, model_fidelity,
                              summarize_fidelity)
from condsub.models import FunctionModel
from condsub.samplers import CsPermutation, MarginalPermutation, NoneSampler
from condsub.subgroups import fit_partition
from tests.conftest import bimodal_pair


def _reference_mmd(A, B, sigma):
    """Naive double-sum oracle, diagonals included."""
    gamma = 1.0 / (2.0 * sigma ** 2)

    def k(x, z):
        return np.exp(-gamma * np.sum((x - z) ** 2))

    n, l = len(A), len(B)
    t1 = sum(k(x, z) for x in A for z in A) / n ** 2
    t2 = sum(k(x, z) for x in A for z in B) * 2 / (n * l)
    t3 = sum(k(x, z) for x in B for z in B) / l ** 2
    return t1 - t2 + t3


def _standardize_pooled(A, B):
    pooled = np.vstack([A, B])
    mu, sd = pooled.mean(axis=0), pooled.std(axis=0)
    sd[sd == 0] = 1.0
    return (A - mu) / sd, (B - mu) / sd


def test_identical_sets_zero():
    d = bimodal_pair(60, seed=0)
    assert abs(mmd(d, d)) < 1e-12


def test_matches_triple_loop_reference():
    rng = np.random.default_rng(1)
    for trial in range(25):
        n, l = rng.integers(3, 9), rng.integers(3, 9)
        A = rng.standard_normal((n, 2))
        B = rng.standard_normal((l, 2)) + rng.uniform(-1, 1)
        da = from_arrays(["a", "b"], [A[:, 0], A[:, 1]])
        db = from_arrays(["a", "b"], [B[:, 0], B[:, 1]])
        sigma = 0.5 + rng.uniform(0, 2)
        got = mmd(da, db, KernelConfig(sigma=sigma))
        As, Bs = _standardize_pooled(A, B)
        want = _reference_mmd(As, Bs, sigma)
        assert abs(got - want) < 1e-12


def test_symmetry_and_nonnegativity():
    rng = np.random.default_rng(2)
    da = from_arrays(["a"], [rng.standard_normal(40)])
    db = from_arrays(["a"], [rng.standard_normal(40) + 0.3])
    assert abs(mmd(da, db) - mmd(db, da)) < 1e-12
    assert mmd(da, db) >= -1e-12


def test_bandwidth_invariant_to_row_order():
    rng = np.random.default_rng(3)
    d = bimodal_pair(80, seed=3)
    shuffled = d.take(rng.permutation(d.n_rows))
    v1 = mmd(d, shuffled)
    v2 = mmd(shuffled, d)
    assert abs(v1 - v2) < 1e-12


def test_sampler_ordering_on_dependent_data():
    ref = bimodal_pair(800, seed=4)
    train = bimodal_pair(800, seed=5)
    part = fit_partition(train, "x1", max_depth=1)
    marg = MarginalPermutation("x1").fit(train)
    cs = CsPermutation("x1", partition=part).fit(train)
    m_marg = mmd(ref, marg.perturb(ref, seed=6))
    m_cs = mmd(ref, cs.perturb(ref, seed=6))
    m_none = mmd(ref, ref)
    assert m_marg > m_cs > m_none


def test_data_fidelity_clamps_and_logs():
    d = bimodal_pair(50, seed=7)
    fid, value, sigma, clamped = data_fidelity(d, d)
    assert clamped
    assert fid == -np.log(1e-15)
    shifted = d.with_column("x1", d.columns["x1"] + 3)
    fid2, value2, sigma2, clamped2 = data_fidelity(d, shifted)
    assert not clamped2 and np.isfinite(fid2)
    assert fid2 == -np.log(value2)


def _dependent_dataset(n, seed):
    rng = np.random.default_rng(seed)
    cols, names = [], []
    base = rng.standard_normal(n)
    for j in range(9):
        names.append(f"x{j + 1}")
        cols.append(base + rng.standard_normal(n) * (0.5 + 0.2 * j))
    return from_arrays(names, cols, target=base + rng.standard_normal(n))


def test_experiment_requires_enough_features():
    d = bimodal_pair(100, seed=8)
    with pytest.raises(DataError, match="features"):
        data_fidelity_experiment(d, {"none": lambda f: NoneSampler(f)},
                                 n_features=2, n_reps=1, seed=0)


def test_experiment_none_is_upper_bound():
    d = _dependent_dataset(400, seed=9)
    factories = {
        "none": lambda f: NoneSampler(f),
        "marginal": lambda f: MarginalPermutation(f),
        "cs_30": lambda f: CsPermutation(f, max_depth=30),
    }
    results = data_fidelity_experiment(d, factories, n_features=3, n_reps=2,
                                       seed=10)
    summary = {row["sampler"]: row["mean_fidelity"]
               for row in summarize_fidelity(results)}
    assert summary["none"] == max(summary.values())
    assert summary["cs_30"] > summary["marginal"]


def test_experiment_deterministic():
    d = _dependent_dataset(300, seed=11)
    factories = {"marginal": lambda f: MarginalPermutation(f)}
    r1 = data_fidelity_experiment(d, factories, n_features=2, n_reps=2, seed=12)
    r2 = data_fidelity_experiment(d, factories, n_features=2, n_reps=2, seed=12)
    assert [(a.feature, a.repetition, a.mmd) for a in r1] == \
           [(b.feature, b.repetition, b.mmd) for b in r2]


def test_model_fidelity_own_curve_zero():
    rng = np.random.default_rng(13)
    d = from_arrays(["x1"], [rng.uniform(0, 1, 300)])
    model = FunctionModel(lambda c: np.sin(3 * c["x1"]), ["x1"])
    curve = pdp(model, d, "x1", grid=np.linspace(0, 1, 2000))
    assert model_fidelity(model, curve, d, "x1") < 1e-8


def test_model_fidelity_mean_curve_equals_variance():
    rng = np.random.default_rng(14)
    d = from_arrays(["x1", "x2"], [rng.uniform(0, 1, 500),
                                   rng.standard_normal(500)])
    model = FunctionModel(lambda c: c["x1"] * c["x2"], ["x1", "x2"])
    preds = model.predict(d)
    from condsub.effects import EffectCurve
    flat = EffectCurve("x1", "pdp", np.array([0.0, 1.0]),
                       np.full(2, preds.mean()), support=(0.0, 1.0),
                       n_rows=d.n_rows)
    got = model_fidelity(model, flat, d, "x1")
    assert abs(got - np.var(preds)) < 1e-10


def test_model_fidelity_cs_pdp_beats_pdp_on_interaction():
    from tests.conftest import exp_model, triangle_pair
    d = triangle_pair(3000, seed=15)
    train = triangle_pair(3000, seed=16)
    model = exp_model()
    base = model_fidelity(model, pdp(model, d, "x1"), d, "x1")
    part = fit_partition(train, "x1", max_depth=2)
    curves = cs_pdp(model, part, d)
    cs_fid = model_fidelity(model, curves, d, "x1", part=part)
    assert cs_fid < base
