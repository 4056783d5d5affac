"""Feature-dependence report: proportion of loss explained per feature.

Each feature is predicted from all others with a random forest, cross-fitted
on two folds.  Numeric features score R-squared; categorical features score
one minus the misclassification ratio against the training-fold mode.
Negative scores (worse than the baseline) are reported as-is.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import CATEGORICAL, Dataset, SplitSpec, split
from .errors import DataError
from .models import fit_forest
from .rng import rng_for

FOREST_TREES = 100


@dataclass(frozen=True)
class FeatureDependence:
    feature: str
    feature_type: str
    explained_fraction: float


@dataclass(frozen=True)
class DependenceReport:
    per_feature: tuple[FeatureDependence, ...]
    n_rows: int
    seed: int

    def to_csv(self) -> str:
        lines = ["feature,type,explained_fraction"]
        for f in self.per_feature:
            lines.append(f"{f.feature},{f.feature_type},{f.explained_fraction!r}")
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        width = max(len(f.feature) for f in self.per_feature)
        lines = []
        for f in self.per_feature:
            lines.append(f"{f.feature:<{width}}  {100 * f.explained_fraction:6.1f}%")
        return "\n".join(lines)


def _fold_score(train: Dataset, test: Dataset, feature: str, seed: int) -> float:
    others = [n for n in train.feature_names if n != feature]
    x_train = train.select(others)
    x_test = test.select(others)
    if train.feature_types[feature] == CATEGORICAL:
        y_train = train.decode(feature)
        y_test = test.decode(feature)
        forest = fit_forest(x_train, n_trees=FOREST_TREES, seed=seed,
                            target=y_train, classify=True)
        pred = forest._est.predict(x_test.matrix(others))
        mmce_rf = float(np.mean(pred != y_test))
        values, counts = np.unique(y_train, return_counts=True)
        mode = values[np.argmax(counts)]
        mmce_mode = float(np.mean(y_test != mode))
        if mmce_mode == 0:
            raise DataError(f"feature {feature!r} is constant on a fold")
        return 1.0 - mmce_rf / mmce_mode
    y_train = train.columns[feature].astype(float)
    y_test = test.columns[feature].astype(float)
    var = float(np.var(y_test))
    if var == 0:
        raise DataError(f"feature {feature!r} is constant on a fold")
    forest = fit_forest(x_train, n_trees=FOREST_TREES, seed=seed, target=y_train)
    mse = float(np.mean((forest.predict(x_test) - y_test) ** 2))
    return 1.0 - mse / var


def dependence_report(d: Dataset, seed: int = 0) -> DependenceReport:
    """Two-fold cross-fit dependence scores for every feature."""
    if d.n_features < 2:
        raise DataError("need at least 2 features")
    if d.n_rows < 60:
        raise DataError("need at least 60 rows for two cross-fit folds")
    d = d.drop_target()
    fold_a, fold_b = split(d, SplitSpec((0.5, 0.5), seed))
    scores = []
    for fi, feature in enumerate(d.feature_names):
        fseed = int(rng_for(seed, fi).integers(2 ** 31))
        s1 = _fold_score(fold_a, fold_b, feature, fseed)
        s2 = _fold_score(fold_b, fold_a, feature, fseed)
        scores.append(FeatureDependence(
            feature=feature,
            feature_type=d.feature_types[feature],
            explained_fraction=(s1 + s2) / 2.0,
        ))
    return DependenceReport(per_feature=tuple(scores), n_rows=d.n_rows, seed=seed)
