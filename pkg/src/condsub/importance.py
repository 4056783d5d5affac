"""Permutation feature importance, marginal and in conditional subgroups.

The marginal estimator averages, over rows, the mean perturbed loss across M
repetitions minus the original loss.  The subgroup variant applies the same
estimator inside each subgroup and aggregates with n_k/n weights; the two
coincide exactly when the partition has a single group because both use the
same per-group permutation streams.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import DataError
from .models import SQUARED_ERROR, LossFunction, PredictiveModel
from .rng import rng_for
from .samplers import Sampler, _permute_within
from .subgroups import SubgroupPartition, assign_groups, fit_partition

DEFAULT_M = 5


@dataclass(frozen=True)
class GroupImportance:
    group_id: int
    rule: str
    n_test: int
    cs_pfi: float  # NaN marks a group empty on test data (weight 0)
    per_repetition: tuple[float, ...] = ()


@dataclass(frozen=True)
class ImportanceResult:
    feature: str
    marginal_pfi: float
    marginal_per_repetition: tuple[float, ...]
    per_group: tuple[GroupImportance, ...]
    aggregate_cs_pfi: float
    M: int
    seed: int

    def to_json(self) -> str:
        payload = {
            "feature": self.feature,
            "marginal_pfi": self.marginal_pfi,
            "groups": [{"group_id": g.group_id, "rule": g.rule, "n_k": g.n_test,
                        "cs_pfi": None if math.isnan(g.cs_pfi) else g.cs_pfi}
                       for g in self.per_group],
            "aggregate_cs_pfi": self.aggregate_cs_pfi,
            "M": self.M,
            "seed": self.seed,
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def _check(test: Dataset, M: int):
    if test.target is None:
        raise DataError("PFI needs a test target")
    if M < 1:
        raise DataError("M must be >= 1")


def _loss_rows(model: PredictiveModel, data: Dataset, loss: LossFunction) -> np.ndarray:
    return loss.pointwise(data.target, model.predict(data))


def _group_pfi(model, test, feature, j, loss, M, seed, group_ids):
    """Per-group original losses and per-(group, m) perturbed losses."""
    orig = _loss_rows(model, test, loss)
    values = test.columns[feature]
    perm_losses = np.empty((M, test.n_rows))
    for m in range(M):
        replaced = _permute_within(values, group_ids, seed, j, m)
        perm_losses[m] = _loss_rows(model, test.with_column(feature, replaced), loss)
    return orig, perm_losses


def pfi(model: PredictiveModel, test: Dataset, feature: str,
        loss: LossFunction = SQUARED_ERROR, M: int = DEFAULT_M, seed: int = 0):
    """Marginal PFI.  Returns (value, per-repetition values)."""
    _check(test, M)
    j = test.feature_names.index(feature)
    groups = np.zeros(test.n_rows, dtype=np.int64)
    orig, perm = _group_pfi(model, test, feature, j, loss, M, seed, groups)
    per_rep = tuple(float(np.mean(perm[m]) - np.mean(orig)) for m in range(M))
    value = float(np.mean(np.mean(perm, axis=0)) - np.mean(orig))
    return value, per_rep


def pfi_with_sampler(model: PredictiveModel, test: Dataset, sampler: Sampler,
                     loss: LossFunction = SQUARED_ERROR, M: int = DEFAULT_M,
                     seed: int = 0) -> float:
    """PFI estimator with an arbitrary trained replacement sampler."""
    _check(test, M)
    orig = _loss_rows(model, test, loss)
    perturbed = np.empty((M, test.n_rows))
    for m in range(M):
        perturbed[m] = _loss_rows(model, sampler.perturb(test, seed, m), loss)
    return float(np.mean(np.mean(perturbed, axis=0) - orig))


def cs_pfi(model: PredictiveModel, part: SubgroupPartition, test: Dataset,
           loss: LossFunction = SQUARED_ERROR, M: int = DEFAULT_M,
           seed: int = 0) -> ImportanceResult:
    """Subgroup PFI per group plus the n_k/n-weighted aggregate.

    Groups empty on the test data are reported with a NaN value and weight 0.
    The aggregate is summed left-to-right over ascending group id so the
    weighted-sum identity holds bit-for-bit.
    """
    _check(test, M)
    feature = part.feature
    j = test.feature_names.index(feature)
    group_ids = assign_groups(part, test)
    orig, perm = _group_pfi(model, test, feature, j, loss, M, seed, group_ids)
    mean_perm_rows = np.mean(perm, axis=0)

    per_group = []
    n = test.n_rows
    for info in part.groups:
        mask = group_ids == info.group_id
        n_k = int(np.sum(mask))
        if n_k == 0:
            per_group.append(GroupImportance(info.group_id, info.rule, 0, math.nan))
            continue
        reps = tuple(float(np.mean(perm[m][mask]) - np.mean(orig[mask]))
                     for m in range(M))
        value = float(np.mean(mean_perm_rows[mask]) - np.mean(orig[mask]))
        per_group.append(GroupImportance(info.group_id, info.rule, n_k, value, reps))

    aggregate = 0.0
    for g in per_group:
        if g.n_test > 0:
            aggregate += (g.n_test / n) * g.cs_pfi

    marginal, marginal_reps = pfi(model, test, feature, loss, M, seed)
    return ImportanceResult(
        feature=feature,
        marginal_pfi=marginal,
        marginal_per_repetition=marginal_reps,
        per_group=tuple(per_group),
        aggregate_cs_pfi=aggregate,
        M=M,
        seed=seed,
    )


def ground_truth_cpfi(scenario, model: PredictiveModel,
                      loss: LossFunction = SQUARED_ERROR, n_eval: int = 10_000,
                      M: int = DEFAULT_M, seed: int = 0) -> float:
    """Conditional PFI against the scenario's known conditional sampler.

    Fresh evaluation data is generated from the scenario; replacements for
    the dependent feature are drawn from the true conditional distribution.
    """
    _check_scenario(scenario)
    data = scenario.generate_with(n_eval, seed)
    orig = _loss_rows(model, data, loss)
    perturbed = np.empty((M, data.n_rows))
    for m in range(M):
        replacement = scenario.conditional_sample(data, rng_for(seed, 1, m, 0))
        perturbed[m] = _loss_rows(model, data.with_column("x1", replacement), loss)
    return float(np.mean(np.mean(perturbed, axis=0) - orig))


def _check_scenario(scenario):
    for attr in ("generate_with", "conditional_sample"):
        if not hasattr(scenario, attr):
            raise DataError("scenario must expose its true conditional sampler")


def depth_sweep(model: PredictiveModel, train: Dataset, test: Dataset,
                feature: str, depths, loss: LossFunction = SQUARED_ERROR,
                M: int = DEFAULT_M, seed: int = 0,
                min_node_size: int = 30) -> list[dict]:
    """Aggregate cs-PFI per tree depth, with freshly fitted partitions.

    Depth 0 degenerates to the marginal PFI.
    """
    if not depths:
        raise DataError("depths must be non-empty")
    rows = []
    for depth in depths:
        part = fit_partition(train, feature, max_depth=depth,
                             min_node_size=min_node_size)
        result = cs_pfi(model, part, test, loss, M, seed)
        rows.append({
            "depth": int(depth),
            "n_groups": part.n_groups,
            "cs_pfi": result.aggregate_cs_pfi,
            "marginal_pfi": result.marginal_pfi,
        })
    return rows
