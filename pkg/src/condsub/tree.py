"""Greedy variance-reduction regression tree.

This is the partitioning workhorse: it predicts a numeric target from a mix
of numeric and categorical predictors via binary splits.  Split search is
exhaustive per node; categorical predictors are scanned in order of their
within-level target mean, the classical optimal ordering for a variance
criterion.  All tie-breaking is deterministic (lowest predictor index, then
smallest threshold) so refits are bit-identical.

Categorical splits are stored as sets of level *strings*: level codes are
dataset-local, so routing decodes through each dataset's own level table.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import CATEGORICAL, Dataset
from .errors import PartitionError, UnseenLevelError


@dataclass
class Node:
    # internal node fields (None on leaves)
    feature: str | None = None
    threshold: float | None = None
    level_set: frozenset[str] | None = None
    left: "Node | None" = None
    right: "Node | None" = None
    # leaf fields
    value: float = 0.0
    count: int = 0
    sse: float = 0.0
    group_id: int = -1

    @property
    def is_leaf(self) -> bool:
        return self.feature is None


@dataclass
class Tree:
    root: Node
    predictors: tuple[str, ...]
    # closed level tables observed at fit time, per categorical predictor
    known_levels: dict[str, frozenset[str]] = field(default_factory=dict)

    def leaves(self) -> list[Node]:
        out = []

        def walk(node):
            if node.is_leaf:
                out.append(node)
            else:
                walk(node.left)
                walk(node.right)

        walk(self.root)
        return out

    def route(self, data: Dataset) -> np.ndarray:
        """Group id per row; numeric routing is `value <= threshold -> left`."""
        return self._walk(data, lambda node: node.group_id, dtype=np.int64)

    def predict(self, data: Dataset) -> np.ndarray:
        """Leaf-mean prediction per row."""
        return self._walk(data, lambda node: node.value, dtype=float)

    def _walk(self, data: Dataset, leaf_value, dtype) -> np.ndarray:
        out = np.empty(data.n_rows, dtype=dtype)
        decoded = {}
        for name in self.predictors:
            if name in self.known_levels:
                col = data.decode(name)
                bad = sorted(set(col) - self.known_levels[name])
                if bad:
                    raise UnseenLevelError(
                        f"unseen level {bad[0]!r} for feature {name!r}")
                decoded[name] = col
            else:
                decoded[name] = np.asarray(data.columns[name], dtype=float)

        def walk(node: Node, idx: np.ndarray):
            if node.is_leaf:
                out[idx] = leaf_value(node)
                return
            col = decoded[node.feature][idx]
            if node.level_set is not None:
                mask = np.isin(col, list(node.level_set))
            else:
                mask = col <= node.threshold
            walk(node.left, idx[mask])
            walk(node.right, idx[~mask])

        walk(self.root, np.arange(data.n_rows))
        return out


def _best_numeric_split(x, y, min_node_size):
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    n = len(xs)
    csum = np.cumsum(ys)
    csq = np.cumsum(ys ** 2)
    total_sum, total_sq = csum[-1], csq[-1]
    best = None
    boundaries = np.nonzero(np.diff(xs) > 0)[0]
    for b in boundaries:
        nl = b + 1
        nr = n - nl
        if nl < min_node_size or nr < min_node_size:
            continue
        sl, ql = csum[b], csq[b]
        sse = (ql - sl * sl / nl) + ((total_sq - ql) - (total_sum - sl) ** 2 / nr)
        thr = (xs[b] + xs[b + 1]) / 2.0
        if best is None or sse < best[0]:
            best = (sse, thr)
    return best  # (children_sse, threshold) or None


def _best_categorical_split(values, y, min_node_size):
    present = sorted(set(values))
    if len(present) < 2:
        return None
    means = np.array([np.mean(y[values == lvl]) for lvl in present])
    order = [present[i] for i in np.argsort(means, kind="stable")]
    rank = {lvl: i for i, lvl in enumerate(order)}
    x_ord = np.array([rank[v] for v in values], dtype=float)
    got = _best_numeric_split(x_ord, y, min_node_size)
    if got is None:
        return None
    sse, thr = got
    left_levels = frozenset(order[: int(np.floor(thr)) + 1])
    return sse, left_levels


def fit_tree(data: Dataset, target: np.ndarray, predictors,
             max_depth: int, min_node_size: int) -> Tree:
    """Fit the tree; `target` is aligned with `data` rows.

    A split is accepted only if both children hold at least `min_node_size`
    rows and the summed child SSE is strictly below the node SSE.
    """
    if max_depth < 0:
        raise PartitionError("max_depth must be >= 0")
    if min_node_size < 1:
        raise PartitionError("min_node_size must be >= 1")
    y = np.asarray(target, dtype=float)
    predictors = tuple(predictors)
    decoded = {}
    known = {}
    for name in predictors:
        if data.feature_types[name] == CATEGORICAL:
            col = data.decode(name)
            decoded[name] = col
            known[name] = frozenset(data.levels[name])
        else:
            decoded[name] = np.asarray(data.columns[name], dtype=float)

    def sse_of(vals):
        return float(np.sum((vals - np.mean(vals)) ** 2)) if len(vals) else 0.0

    def build(idx: np.ndarray, depth: int) -> Node:
        sub_y = y[idx]
        node = Node(value=float(np.mean(sub_y)), count=len(idx), sse=sse_of(sub_y))
        if depth >= max_depth or len(idx) < 2 * min_node_size or node.sse <= 0.0:
            return node
        best = None  # (children_sse, feat_pos, threshold, level_set)
        for pos, name in enumerate(predictors):
            col = decoded[name][idx]
            if name in known:
                got = _best_categorical_split(col, sub_y, min_node_size)
                if got is None:
                    continue
                cand = (got[0], pos, None, got[1])
            else:
                got = _best_numeric_split(col, sub_y, min_node_size)
                if got is None:
                    continue
                cand = (got[0], pos, got[1], None)
            if best is None or cand[0] < best[0]:
                best = cand
        if best is None or best[0] >= node.sse:
            return node
        _, pos, thr, level_set = best
        name = predictors[pos]
        col = decoded[name][idx]
        mask = np.isin(col, list(level_set)) if level_set is not None else col <= thr
        node.feature = name
        node.threshold = thr
        node.level_set = level_set
        node.left = build(idx[mask], depth + 1)
        node.right = build(idx[~mask], depth + 1)
        return node

    root = build(np.arange(data.n_rows), 0)
    counter = 0

    def number(node: Node):
        nonlocal counter
        if node.is_leaf:
            node.group_id = counter
            counter += 1
        else:
            number(node.left)
            number(node.right)

    number(root)
    return Tree(root=root, predictors=predictors, known_levels=known)
