"""Ground-truth simulation suite with known conditional distributions.

Feature x1 is generated as g(x2..x10) plus noise whose law is known, so the
conditional importance of x1 can be computed exactly by resampling from that
law.  The outcome is y = x1*x2 + sum(x1..x10) + noise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from joblib import Parallel, delayed

from .data import Dataset, SplitSpec, from_arrays, split
from .errors import DataError
from .importance import cs_pfi, ground_truth_cpfi, pfi, pfi_with_sampler
from .models import SQUARED_ERROR, FunctionModel, PredictiveModel, fit_forest
from .rng import rng_for
from .samplers import CsPermutation, ImputeResidual
from .subgroups import fit_partition

SCENARIOS = ("independent", "linear", "nonlinear", "multi_linear")
N_INFORMATIVE = 10


@dataclass(frozen=True)
class ScenarioSpec:
    kind: str
    n: int
    p_total: int = 10
    noise_sd: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in SCENARIOS:
            raise DataError(f"unknown scenario {self.kind!r}")
        if self.p_total < N_INFORMATIVE:
            raise DataError(f"p_total must be >= {N_INFORMATIVE}")

    # --- the known conditional law of x1 given the other features ---

    def _g(self, cols: dict[str, np.ndarray]) -> np.ndarray:
        x2 = cols["x2"]
        if self.kind == "independent":
            return np.zeros_like(x2)
        if self.kind == "linear":
            return x2.copy()
        if self.kind == "nonlinear":
            x3 = cols["x3"]
            return 3.0 * (x2 > 0) - 3.0 * (x2 <= 0) * (x3 > 0)
        return sum(cols[f"x{j}"] for j in range(2, N_INFORMATIVE + 1))

    def _noise_sd_x1(self, cols: dict[str, np.ndarray]) -> np.ndarray:
        x2 = cols["x2"]
        if self.kind == "nonlinear":
            # three-branch sd over the (x2, x3) sign quadrants
            x3 = cols["x3"]
            return (1.0 * (x2 > 0)
                    + 2.0 * (x2 <= 0) * (x3 > 0)
                    + 5.0 * (x2 <= 0) * (x3 <= 0))
        if self.kind == "multi_linear":
            return np.full_like(x2, 5.0)
        return np.ones_like(x2)

    def conditional_sample(self, data: Dataset, rng: np.random.Generator) -> np.ndarray:
        """Draw x1 from its true conditional distribution given the data's x2..x10."""
        cols = {n: data.columns[n] for n in data.feature_names if n != "x1"}
        g = self._g(cols)
        return g + rng.normal(0.0, 1.0, size=len(g)) * self._noise_sd_x1(cols)

    def generate_with(self, n: int, seed: int) -> Dataset:
        return generate(replace(self, n=n, seed=seed))


def generate(spec: ScenarioSpec) -> Dataset:
    """Simulate the scenario; x2..x10 (and any extra noise features) are iid N(0,1)."""
    rng = rng_for(spec.seed, 0)
    names = [f"x{j}" for j in range(1, spec.p_total + 1)]
    cols = {name: rng.standard_normal(spec.n) for name in names[1:]}
    g = spec._g(cols)
    cols["x1"] = g + rng.standard_normal(spec.n) * spec._noise_sd_x1(cols)
    y = (cols["x1"] * cols["x2"]
         + sum(cols[f"x{j}"] for j in range(1, N_INFORMATIVE + 1))
         + rng.normal(0.0, spec.noise_sd, size=spec.n))
    return from_arrays(names, [cols[n] for n in names], target=y)


def true_model(spec: ScenarioSpec | None = None) -> PredictiveModel:
    """The noise-free data-generating function x1*x2 + sum(x1..x10)."""

    def fn(cols):
        return (cols["x1"] * cols["x2"]
                + sum(cols[f"x{j}"] for j in range(1, N_INFORMATIVE + 1)))

    names = [f"x{j}" for j in range(1, (spec.p_total if spec else N_INFORMATIVE) + 1)]
    return FunctionModel(fn, names)


TABLE2_METHODS = ("cs_pfi_cart", "impute_rf", "marginal_pfi")


def _estimate(method: str, model, train: Dataset, test: Dataset, M: int,
              seed: int, depth: int, impute_trees: int) -> float:
    if method == "cs_pfi_cart":
        part = fit_partition(train, "x1", max_depth=depth)
        return cs_pfi(model, part, test, SQUARED_ERROR, M, seed).aggregate_cs_pfi
    if method == "impute_rf":
        sampler = ImputeResidual("x1", n_trees=impute_trees, seed=seed).fit(train)
        return pfi_with_sampler(model, test, sampler, SQUARED_ERROR, M, seed)
    if method == "marginal_pfi":
        return pfi(model, test, "x1", SQUARED_ERROR, M, seed)[0]
    raise DataError(f"unknown method {method!r}")


def _one_replicate(spec: ScenarioSpec, methods, model_kind, M, depth,
                   impute_trees, rep_seed):
    data = generate(replace(spec, seed=rep_seed))
    train, test = split(data, SplitSpec((2 / 3, 1 / 3), rep_seed))
    if model_kind == "true":
        model = true_model(spec)
    else:
        model = fit_forest(train, n_trees=100, seed=rep_seed)
    return {m: _estimate(m, model, train, test, M, rep_seed, depth, impute_trees)
            for m in methods}


def run_table2(scenarios=SCENARIOS, methods=TABLE2_METHODS, n: int = 3000,
               p_total: int = 10, n_replicates: int = 50, M: int = 5,
               seed: int = 0, model_kind: str = "true", depth: int = 30,
               impute_trees: int = 50, gt_n: int = 20_000, gt_M: int = 20,
               n_jobs: int = 1) -> list[dict]:
    """MSE of each conditional-PFI method against the ground truth.

    Per replicate: generate, split 2/3 train / 1/3 test, train samplers on
    the training part, estimate on the test part, square the deviation from
    the ground-truth conditional PFI.  Setting (II) swaps the true model for
    a 100-tree forest per replicate.
    """
    unknown = set(methods) - set(TABLE2_METHODS)
    if unknown:
        raise DataError(f"unknown methods {sorted(unknown)}")
    rows = []
    for si, kind in enumerate(scenarios):
        spec = ScenarioSpec(kind=kind, n=n, p_total=p_total, seed=seed)
        gt = None
        if model_kind == "true":
            gt = ground_truth_cpfi(spec, true_model(spec), SQUARED_ERROR,
                                   n_eval=gt_n, M=gt_M, seed=seed)
        rep_seeds = [int(rng_for(seed, 2, si, r).integers(2 ** 31))
                     for r in range(n_replicates)]
        estimates = Parallel(n_jobs=n_jobs)(
            delayed(_one_replicate)(spec, methods, model_kind, M, depth,
                                    impute_trees, s)
            for s in rep_seeds)
        if gt is None:
            # setting (II): the conditional PFI depends on the fitted model,
            # so recompute the ground truth per replicate
            gts = Parallel(n_jobs=n_jobs)(
                delayed(_gt_for_forest)(spec, s, gt_n, gt_M) for s in rep_seeds)
        else:
            gts = [gt] * n_replicates
        for method in methods:
            sq = [(est[method] - g) ** 2 for est, g in zip(estimates, gts)]
            rows.append({
                "scenario": kind, "n": n, "p": p_total, "method": method,
                "mse": float(np.mean(sq)),
                "ground_truth": float(np.mean(gts)),
                "n_replicates": n_replicates,
            })
    return rows


def _gt_for_forest(spec: ScenarioSpec, rep_seed: int, gt_n: int, gt_M: int) -> float:
    data = generate(replace(spec, seed=rep_seed))
    train, _ = split(data, SplitSpec((2 / 3, 1 / 3), rep_seed))
    model = fit_forest(train, n_trees=100, seed=rep_seed)
    return ground_truth_cpfi(spec, model, SQUARED_ERROR, n_eval=gt_n,
                             M=gt_M, seed=rep_seed)


def table2_text(rows: list[dict]) -> str:
    """Aligned-text rendering of the simulation MSE table."""
    methods = sorted({r["method"] for r in rows})
    keys = sorted({(r["scenario"], r["n"], r["p"]) for r in rows})
    header = ["setting"] + methods
    lines = ["  ".join(f"{h:>14}" for h in header)]
    for scenario, n, p in keys:
        cells = [f"{scenario} n={n}, p={p}"]
        for m in methods:
            match = [r for r in rows if r["method"] == m
                     and (r["scenario"], r["n"], r["p"]) == (scenario, n, p)]
            cells.append(f"{match[0]['mse']:.2f}" if match else "-")
        lines.append("  ".join(f"{c:>14}" for c in cells))
    return "\n".join(lines)
