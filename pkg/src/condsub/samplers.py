"""Intervention strategies producing a replacement column for one feature.

Each sampler is trained on the training split only, then applied to unseen
rows, so the sampling step cannot overfit the data it perturbs.  Replacement
columns leave every other column untouched.

Permutations are drawn per (seed, feature index, repetition, group) stream;
the marginal permutation is the single-group special case of the
within-group permutation, so a trivial partition reproduces it exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import DataError
from .models import fit_forest
from .rng import rng_for
from .subgroups import SubgroupPartition, assign_groups, fit_partition

DEFAULT_ALE_INTERVALS = 20


def _permute_within(values: np.ndarray, group_ids: np.ndarray,
                    seed: int, j: int, m: int) -> np.ndarray:
    """Independent uniform permutation of `values` inside each group."""
    out = values.copy()
    for k in np.unique(group_ids):
        idx = np.nonzero(group_ids == k)[0]
        perm = rng_for(seed, j, m, int(k)).permutation(len(idx))
        out[idx] = values[idx[perm]]
    return out


class Sampler:
    """Trained replacement-column generator for one feature."""

    kind = "none"

    def __init__(self, feature: str):
        self.feature = feature
        self._feature_index: int | None = None

    def fit(self, train: Dataset) -> "Sampler":
        self._feature_index = train.feature_names.index(self.feature)
        return self

    def sample(self, test: Dataset, seed: int, m: int = 0) -> np.ndarray:
        """Replacement column of length n_test for repetition index m."""
        raise NotImplementedError

    def perturb(self, test: Dataset, seed: int, m: int = 0) -> Dataset:
        return test.with_column(self.feature, self.sample(test, seed, m))


class NoneSampler(Sampler):
    """No intervention; upper bound for data fidelity."""

    kind = "none"

    def sample(self, test, seed, m=0):
        return test.columns[self.feature].copy()


class MarginalPermutation(Sampler):
    """Uniform random permutation of the observed values (multiset preserved)."""

    kind = "marginal"

    def sample(self, test, seed, m=0):
        values = test.columns[self.feature]
        groups = np.zeros(test.n_rows, dtype=np.int64)
        return _permute_within(values, groups, seed, self._feature_index, m)


class CsPermutation(Sampler):
    """Permutation restricted to the subgroups of a fitted partition."""

    kind = "cs_permutation"

    def __init__(self, feature: str, max_depth: int = 30, min_node_size: int = 30,
                 partition: SubgroupPartition | None = None):
        super().__init__(feature)
        self.max_depth = max_depth
        self.min_node_size = min_node_size
        self.partition = partition

    def fit(self, train):
        super().fit(train)
        if self.partition is None:
            self.partition = fit_partition(train, self.feature,
                                           self.max_depth, self.min_node_size)
        return self

    def sample(self, test, seed, m=0):
        groups = assign_groups(self.partition, test)
        return _permute_within(test.columns[self.feature], groups,
                               seed, self._feature_index, m)


class ImputeResidual(Sampler):
    """Random-forest imputation of the feature plus an empirical residual.

    Residuals are drawn uniformly from the forest's training residuals, which
    avoids assuming they are Gaussian or homoscedastic.  Leaves hold at
    least 20 rows by default so the forest does not interpolate the training
    noise, which would shrink the residual pool.
    """

    kind = "impute_residual"

    def __init__(self, feature: str, n_trees: int = 100, seed: int = 0,
                 min_samples_leaf: int = 20):
        super().__init__(feature)
        self.n_trees = n_trees
        self.min_samples_leaf = min_samples_leaf
        self._fit_seed = seed
        self._forest = None
        self._residuals = None

    def fit(self, train):
        super().fit(train)
        others = train.select(n for n in train.feature_names if n != self.feature)
        target = train.columns[self.feature].astype(float)
        self._forest = fit_forest(others, n_trees=self.n_trees,
                                  seed=self._fit_seed, target=target,
                                  min_samples_leaf=self.min_samples_leaf)
        self._residuals = target - self._forest.predict(others)
        return self

    def sample(self, test, seed, m=0):
        pred = self._forest.predict(test)
        rng = rng_for(seed, self._feature_index, m, 0)
        draws = rng.integers(0, len(self._residuals), size=test.n_rows)
        return pred + self._residuals[draws]


SAMPLER_KINDS = {
    "none": NoneSampler,
    "marginal": MarginalPermutation,
    "cs_permutation": CsPermutation,
    "impute_residual": ImputeResidual,
}


@dataclass(frozen=True)
class AleShift:
    """Paired interval-edge copies of the test data for one feature."""

    lower: Dataset
    upper: Dataset
    interval_ids: np.ndarray
    edges: np.ndarray


def ale_shift(train: Dataset, test: Dataset, feature: str,
              n_intervals: int = DEFAULT_ALE_INTERVALS) -> AleShift:
    """Move each value to the bounds of its empirical-quantile interval.

    Interval edges are train-set quantiles (linear interpolation); duplicate
    edges collapse, so fewer distinct values than intervals merge intervals.
    """
    if n_intervals < 1:
        raise DataError("n_intervals must be >= 1")
    if not train.is_numeric(feature):
        raise DataError(f"ale_shift requires numeric feature, got {feature!r}")
    x_train = train.columns[feature].astype(float)
    qs = np.linspace(0.0, 1.0, n_intervals + 1)
    edges = np.unique(np.quantile(x_train, qs))
    if len(edges) < 2:
        edges = np.array([edges[0], edges[0]])
    x = test.columns[feature].astype(float)
    ids = np.clip(np.searchsorted(edges, x, side="left") - 1, 0, len(edges) - 2)
    lower = test.with_column(feature, edges[ids])
    upper = test.with_column(feature, edges[ids + 1])
    return AleShift(lower=lower, upper=upper, interval_ids=ids, edges=edges)
