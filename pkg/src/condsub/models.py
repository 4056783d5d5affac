"""Prediction-function abstraction and built-in learners.

Every model consumes a Dataset (feature columns looked up by name) and
returns one prediction per row, so interpretability code can swap single
columns without caring about the learner.  OLS and k-NN are implemented
directly; the bagged forest wraps scikit-learn behind the same contract.
"""
from __future__ import annotations

import math
import subprocess
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import qr
from sklearn.ensemble import RandomForestClassifier, RandomForestRegressor

from .data import Dataset
from .errors import ModelBridgeError, ModelError
from . import tree as _tree

HANDSHAKE = "CONDSUB-PREDICT 1"


@dataclass(frozen=True)
class LossFunction:
    name: str
    pointwise: Callable[[np.ndarray, np.ndarray], np.ndarray]


SQUARED_ERROR = LossFunction("squared_error", lambda y, yh: (y - yh) ** 2)
MISCLASSIFICATION = LossFunction("misclassification_rate",
                                 lambda y, yh: (y != yh).astype(float))


class PredictiveModel:
    """Batch prediction over a Dataset; deterministic, stateless."""

    feature_names: tuple[str, ...] = ()
    feature_types: dict[str, str] = {}

    def predict(self, data: Dataset) -> np.ndarray:
        raise NotImplementedError


class FunctionModel(PredictiveModel):
    """Wrap an in-process closure over named feature columns."""

    def __init__(self, fn, feature_names):
        self.fn = fn
        self.feature_names = tuple(feature_names)

    def predict(self, data: Dataset) -> np.ndarray:
        cols = {n: np.asarray(data.columns[n], dtype=float) for n in self.feature_names}
        return np.asarray(self.fn(cols), dtype=float)


class OLSModel(PredictiveModel):
    def __init__(self, names, coef, intercept):
        self.feature_names = tuple(names)
        self.coef = coef
        self.intercept = intercept

    def predict(self, data: Dataset) -> np.ndarray:
        return data.matrix(self.feature_names) @ self.coef + self.intercept


def fit_ols(train: Dataset) -> OLSModel:
    """Least squares via pivoted QR; rank deficiency names the collinear columns."""
    if train.target is None:
        raise ModelError("training data has no target")
    names = train.feature_names
    if any(not train.is_numeric(n) for n in names):
        raise ModelError("fit_ols requires numeric features only")
    n, p = train.n_rows, len(names)
    if n <= p:
        raise ModelError(f"need n > p, got n={n}, p={p}")
    X = np.column_stack([np.ones(n), train.matrix(names)])
    Q, R, piv = qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = max(X.shape) * np.finfo(float).eps * (diag[0] if len(diag) else 1.0)
    rank = int(np.sum(diag > tol))
    if rank < p + 1:
        labels = ["<intercept>"] + list(names)
        bad = sorted(labels[i] for i in piv[rank:])
        raise ModelError(f"rank-deficient design matrix; collinear columns: {bad}")
    beta = np.zeros(p + 1)
    beta[piv] = np.linalg.solve(R, Q.T @ train.target)
    return OLSModel(names, beta[1:], float(beta[0]))


class KNNModel(PredictiveModel):
    def __init__(self, names, train_std, y, k, means, sds):
        self.feature_names = tuple(names)
        self._train = train_std
        self._y = y
        self.k = k
        self._means = means
        self._sds = sds

    def predict(self, data: Dataset) -> np.ndarray:
        X = (data.matrix(self.feature_names) - self._means) / self._sds
        out = np.empty(len(X))
        # chunk queries so the distance matrix stays small
        step = max(1, int(2e7 // max(1, len(self._train))))
        for start in range(0, len(X), step):
            block = X[start:start + step]
            d2 = ((block[:, None, :] - self._train[None, :, :]) ** 2).sum(axis=2)
            # stable sort: distance ties break toward the lowest training row
            nearest = np.argsort(d2, axis=1, kind="stable")[:, : self.k]
            out[start:start + step] = self._y[nearest].mean(axis=1)
        return out


def fit_knn(train: Dataset, k: int) -> KNNModel:
    """Mean target of the k nearest rows under standardized Euclidean distance."""
    if train.target is None:
        raise ModelError("training data has no target")
    names = train.feature_names
    if any(not train.is_numeric(n) for n in names):
        raise ModelError("fit_knn requires numeric features only")
    if not 1 <= k <= train.n_rows:
        raise ModelError(f"k={k} out of range 1..{train.n_rows}")
    X = train.matrix(names)
    means = X.mean(axis=0)
    sds = X.std(axis=0)
    sds[sds == 0] = 1.0
    return KNNModel(names, (X - means) / sds, train.target.copy(), k, means, sds)


class ForestModel(PredictiveModel):
    """Bagged CART forest (scikit-learn) behind the Dataset contract."""

    def __init__(self, names, estimator):
        self.feature_names = tuple(names)
        self._est = estimator

    def predict(self, data: Dataset) -> np.ndarray:
        return self._est.predict(data.matrix(self.feature_names))


def fit_forest(train: Dataset, n_trees: int = 100, seed: int = 0,
               target: np.ndarray | None = None, classify: bool = False,
               min_samples_leaf: int = 1) -> ForestModel:
    """Bootstrap-aggregated regression trees with ceil(p/3) split candidates.

    Categorical predictors enter as integer level codes.  `target` overrides
    the dataset target (used when predicting one feature from the others).
    """
    y = train.target if target is None else np.asarray(target)
    if y is None:
        raise ModelError("training data has no target")
    if n_trees < 1:
        raise ModelError("n_trees must be >= 1")
    names = train.feature_names
    p = len(names)
    cls = RandomForestClassifier if classify else RandomForestRegressor
    est = cls(n_estimators=n_trees, max_features=max(1, math.ceil(p / 3)),
              random_state=int(seed), n_jobs=1, min_samples_leaf=min_samples_leaf)
    est.fit(train.matrix(names), y)
    return ForestModel(names, est)


def fit_cart(train: Dataset, max_depth: int = 30, min_node_size: int = 30) -> PredictiveModel:
    """Single variance-reduction CART over all features."""
    if train.target is None:
        raise ModelError("training data has no target")
    t = _tree.fit_tree(train, train.target, train.feature_names, max_depth, min_node_size)

    class _CartModel(PredictiveModel):
        feature_names = train.feature_names

        def predict(self, data: Dataset) -> np.ndarray:
            return t.predict(data)

    return _CartModel()


class ExternalModel(PredictiveModel):
    """Subprocess bridge speaking the line protocol.

    Handshake: the child prints `CONDSUB-PREDICT 1` on startup.  Each request
    is a header `PREDICT <n_rows>` followed by n_rows CSV lines in training
    column order; the reply is n_rows lines, one decimal literal each.
    Requests are serialized per process instance.
    """

    def __init__(self, command, feature_names, feature_types=None):
        self.command = list(command)
        self.feature_names = tuple(feature_names)
        self.feature_types = dict(feature_types or {})
        try:
            self._proc = subprocess.Popen(
                self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                text=True, bufsize=1)
        except OSError as exc:
            raise ModelBridgeError(f"cannot start {self.command}: {exc}") from exc
        line = self._proc.stdout.readline().strip()
        if line != HANDSHAKE:
            self._proc.kill()
            raise ModelBridgeError(f"bad handshake {line!r}, expected {HANDSHAKE!r}")

    def predict(self, data: Dataset) -> np.ndarray:
        n = data.n_rows
        rows = []
        for name in self.feature_names:
            if name in data.levels:
                rows.append([f'"{v}"' for v in data.decode(name)])
            else:
                rows.append([repr(float(v)) for v in data.columns[name]])
        payload = [f"PREDICT {n}"]
        payload += [",".join(col[i] for col in rows) for i in range(n)]
        try:
            self._proc.stdin.write("\n".join(payload) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ModelBridgeError(f"external model process exited: {exc}") from exc
        out = np.empty(n)
        for i in range(n):
            line = self._proc.stdout.readline()
            if line == "":
                raise ModelBridgeError(
                    f"count mismatch: got {i} prediction lines, expected {n}")
            try:
                out[i] = float(line.strip())
            except ValueError as exc:
                raise ModelBridgeError(f"malformed prediction line {line!r}") from exc
        return out

    def close(self):
        if self._proc.poll() is None:
            self._proc.stdin.close()
            self._proc.wait(timeout=5)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def external_model(command, feature_names, feature_types=None) -> ExternalModel:
    return ExternalModel(command, feature_names, feature_types)
