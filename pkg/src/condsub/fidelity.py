"""Distributional and model fidelity of feature interventions.

Data fidelity scores an intervention by how little it disturbs the joint
distribution: -log of the kernel two-sample MMD between an untouched
reference split and the perturbed test split.  Model fidelity scores an
effect curve by its mean squared distance to the model's own predictions.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed
from scipy.spatial.distance import cdist

from .data import Dataset, SplitSpec, split, subsample
from .effects import EffectCurve
from .errors import DataError
from .models import PredictiveModel
from .rng import rng_for
from .samplers import Sampler
from .subgroups import SubgroupPartition, assign_groups

MMD_CLAMP = 1e-15
SUBSAMPLE_CAP = 10_000
MIN_NUMERIC_FEATURES = 8


@dataclass(frozen=True)
class KernelConfig:
    """RBF kernel; bandwidth defaults to the pooled median L2 heuristic."""

    sigma: float | None = None

    def resolve(self, pooled: np.ndarray) -> float:
        if self.sigma is not None:
            if self.sigma <= 0:
                raise DataError("kernel bandwidth must be positive")
            return self.sigma
        d = cdist(pooled, pooled, "euclidean")
        sigma = float(np.median(d[np.triu_indices(len(pooled), k=1)]))
        if sigma <= 0:
            raise DataError("zero bandwidth: all points identical")
        return sigma


@dataclass(frozen=True)
class FidelityResult:
    dataset_id: str
    feature: str
    sampler_kind: str
    repetition: int
    mmd: float
    data_fidelity: float
    sigma: float
    clamped: bool = False


def _numeric_matrix(d: Dataset) -> np.ndarray:
    names = d.numeric_features()
    if not names:
        raise DataError("MMD needs at least one numeric column")
    return d.matrix(names)


def mmd(a: Dataset, b: Dataset, cfg: KernelConfig | None = None) -> float:
    """Biased V-statistic MMD with an RBF kernel, diagonal terms included.

    Categorical columns are excluded; numeric columns are standardized with
    statistics pooled over both samples, which keeps the statistic symmetric.
    """
    if a.feature_names != b.feature_names:
        raise DataError("datasets must share columns")
    cfg = cfg or KernelConfig()
    xa, xb = _numeric_matrix(a), _numeric_matrix(b)
    pooled = np.vstack([xa, xb])
    mean = pooled.mean(axis=0)
    sd = pooled.std(axis=0)
    sd[sd == 0] = 1.0
    xa = (xa - mean) / sd
    xb = (xb - mean) / sd
    sigma = cfg.resolve(np.vstack([xa, xb]))
    gamma = 1.0 / (2.0 * sigma ** 2)
    n, l = len(xa), len(xb)
    kaa = np.exp(-gamma * cdist(xa, xa, "sqeuclidean"))
    kbb = np.exp(-gamma * cdist(xb, xb, "sqeuclidean"))
    kab = np.exp(-gamma * cdist(xa, xb, "sqeuclidean"))
    return float(kaa.sum() / n ** 2 - 2.0 * kab.sum() / (n * l) + kbb.sum() / l ** 2)


def data_fidelity(a: Dataset, b: Dataset, cfg: KernelConfig | None = None):
    """-log(MMD); near-zero MMD is clamped at 1e-15 and flagged."""
    cfg = cfg or KernelConfig()
    xa = _numeric_matrix(a)
    xb = _numeric_matrix(b)
    pooled = np.vstack([xa, xb])
    mean, sd = pooled.mean(axis=0), pooled.std(axis=0)
    sd[sd == 0] = 1.0
    sigma = cfg.resolve((pooled - mean) / sd)
    value = mmd(a, b, cfg)
    clamped = value <= MMD_CLAMP
    return float(-np.log(max(value, MMD_CLAMP))), value, sigma, clamped


def _one_repetition(d, dataset_id, feature, sampler_factories, rep, seed):
    sub = subsample(d, SUBSAMPLE_CAP, seed)
    d_train, d_test, d_ref = split(sub, SplitSpec((0.4, 0.3, 0.3), seed))
    out = []
    for name, factory in sampler_factories.items():
        sampler: Sampler = factory(feature)
        sampler.fit(d_train)
        perturbed = sampler.perturb(d_test, seed)
        fid, value, sigma, clamped = data_fidelity(d_ref, perturbed)
        out.append(FidelityResult(dataset_id=dataset_id, feature=feature,
                                  sampler_kind=name, repetition=rep,
                                  mmd=value, data_fidelity=fid, sigma=sigma,
                                  clamped=clamped))
    return out


def data_fidelity_experiment(d: Dataset, sampler_factories, n_features: int = 10,
                             n_reps: int = 30, seed: int = 0,
                             dataset_id: str = "data", n_jobs: int = 1,
                             min_features: int = MIN_NUMERIC_FEATURES
                             ) -> list[FidelityResult]:
    """Per-feature, per-repetition fidelity scores for named samplers.

    `sampler_factories` maps a label (reported as sampler_kind) to a callable
    building an untrained sampler for a feature name.

    Each repetition independently caps the sample at 10k rows, splits it
    40/30/30 into train/test/reference, trains every sampler on the training
    part and scores -log(MMD(reference, perturbed test)).
    """
    numeric = d.drop_target().select(d.numeric_features())
    if numeric.n_features < min_features:
        raise DataError(
            f"need >= {min_features} numeric features, got {numeric.n_features}")
    order = rng_for(seed, 0).permutation(numeric.n_features)
    features = [numeric.feature_names[i] for i in order[:n_features]]
    jobs = []
    for fi, feature in enumerate(features):
        for rep in range(n_reps):
            jobs.append((feature, rep, int(rng_for(seed, 1, fi, rep).integers(2 ** 31))))
    results = Parallel(n_jobs=n_jobs)(
        delayed(_one_repetition)(numeric, dataset_id, feature, sampler_factories,
                                 rep, s)
        for feature, rep, s in jobs)
    return [r for chunk in results for r in chunk]


def summarize_fidelity(results: list[FidelityResult]) -> list[dict]:
    """Mean data fidelity and mean rank per sampler kind.

    Ranks are computed within each (dataset, feature, repetition) cell,
    rank 1 being the highest fidelity.
    """
    kinds = sorted({r.sampler_kind for r in results})
    cells: dict[tuple, list[FidelityResult]] = {}
    for r in results:
        cells.setdefault((r.dataset_id, r.feature, r.repetition), []).append(r)
    rank_sums = {k: 0.0 for k in kinds}
    fid_sums = {k: 0.0 for k in kinds}
    counts = {k: 0 for k in kinds}
    for cell in cells.values():
        ordered = sorted(cell, key=lambda r: -r.data_fidelity)
        for rank, r in enumerate(ordered, 1):
            rank_sums[r.sampler_kind] += rank
            fid_sums[r.sampler_kind] += r.data_fidelity
            counts[r.sampler_kind] += 1
    rows = []
    for k in kinds:
        c = max(counts[k], 1)
        rows.append({"sampler": k, "mean_fidelity": fid_sums[k] / c,
                     "mean_rank": rank_sums[k] / c, "n": counts[k]})
    rows.sort(key=lambda r: r["mean_rank"])
    return rows


def model_fidelity(model: PredictiveModel, curve: EffectCurve | list[EffectCurve],
                   test: Dataset, feature: str,
                   part: SubgroupPartition | None = None) -> float:
    """Mean squared error between model predictions and the effect curve.

    The curve acts as a one-feature surrogate, evaluated by linear
    interpolation (nearest endpoint outside its grid).  For subgroup curves,
    pass the partition: each row is scored against its own group's curve and
    rows in groups without a curve are skipped.
    """
    preds = model.predict(test)
    x = test.columns[feature].astype(float)
    if isinstance(curve, EffectCurve):
        if len(curve.grid) == 0:
            raise DataError("empty curve")
        return float(np.mean((preds - curve.interpolate(x)) ** 2))
    if part is None:
        raise DataError("subgroup curves need the partition for row routing")
    group_ids = assign_groups(part, test)
    by_group = {c.group_id: c for c in curve}
    err, count = 0.0, 0
    for gid, c in sorted(by_group.items()):
        mask = group_ids == gid
        if not np.any(mask):
            continue
        err += float(np.sum((preds[mask] - c.interpolate(x[mask])) ** 2))
        count += int(np.sum(mask))
    if count == 0:
        raise DataError("no rows matched any subgroup curve")
    return err / count
