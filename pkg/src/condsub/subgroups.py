"""Interpretable subgroup partitions for one feature.

A partition tree predicts the feature of interest from all other features.
Its terminal nodes are the subgroups: within each, the feature is closer to
independent of the rest, so a plain permutation there approximates the
conditional distribution.  Default depth 30 grows the tree fully; depth 2 is
the recommended setting when the subgroup rules should stay readable.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import PartitionError
from .tree import Node, Tree, fit_tree

DEFAULT_MIN_NODE_SIZE = 30
DEFAULT_MAX_DEPTH = 30


@dataclass(frozen=True)
class GroupInfo:
    group_id: int
    rule: str
    n_train: int


@dataclass(frozen=True)
class SubgroupPartition:
    feature: str
    tree: Tree
    groups: tuple[GroupInfo, ...]
    max_depth: int
    min_node_size: int

    @property
    def n_groups(self) -> int:
        return len(self.groups)


def _format_value(v: float) -> str:
    return f"{v:.6g}"


def _rules(tree: Tree) -> dict[int, str]:
    """One conjunctive rule per leaf; numeric bounds merged per feature."""
    rules: dict[int, str] = {}

    def walk(node: Node, bounds, level_sets):
        if node.is_leaf:
            parts = []
            for name in tree.predictors:
                if name in level_sets:
                    levels = sorted(level_sets[name])
                    parts.append(f"{name} in {{{', '.join(levels)}}}")
                if name in bounds:
                    lo, hi = bounds[name]
                    if lo is not None and hi is not None:
                        parts.append(f"{_format_value(lo)} < {name} <= {_format_value(hi)}")
                    elif hi is not None:
                        parts.append(f"{name} <= {_format_value(hi)}")
                    elif lo is not None:
                        parts.append(f"{name} > {_format_value(lo)}")
            rules[node.group_id] = " AND ".join(parts) if parts else "TRUE"
            return
        name = node.feature
        if node.level_set is not None:
            all_levels = level_sets.get(name, tree.known_levels[name])
            left_ls = dict(level_sets)
            left_ls[name] = all_levels & node.level_set
            right_ls = dict(level_sets)
            right_ls[name] = all_levels - node.level_set
            walk(node.left, bounds, left_ls)
            walk(node.right, bounds, right_ls)
        else:
            lo, hi = bounds.get(name, (None, None))
            left_b = dict(bounds)
            left_b[name] = (lo, node.threshold if hi is None else min(hi, node.threshold))
            right_b = dict(bounds)
            right_b[name] = (node.threshold if lo is None else max(lo, node.threshold), hi)
            walk(node.left, left_b, level_sets)
            walk(node.right, right_b, level_sets)

    walk(tree.root, {}, {})
    return rules


def fit_partition(train: Dataset, feature: str,
                  max_depth: int = DEFAULT_MAX_DEPTH,
                  min_node_size: int = DEFAULT_MIN_NODE_SIZE) -> SubgroupPartition:
    """Fit the partition tree with the feature of interest as target.

    Depth 0 yields the single-leaf (marginal) partition.  The feature of
    interest must be numeric: the variance criterion targets its
    distribution; partitioning a categorical feature of interest is an
    extension point, not silently approximated.
    """
    if feature not in train.feature_names:
        raise PartitionError(f"unknown feature {feature!r}")
    if not train.is_numeric(feature):
        raise PartitionError(
            f"feature of interest {feature!r} is categorical; the partition "
            "tree targets numeric features only")
    if train.n_rows < 2 * min_node_size:
        # no split can satisfy the child-size constraint: single leaf
        max_depth = 0
    others = tuple(n for n in train.feature_names if n != feature)
    if not others:
        raise PartitionError("no complementary features to split on")
    if max_depth > 0 and all(
            len(np.unique(train.decode(n))) == 1 for n in others):
        raise PartitionError("all complementary features are constant")
    target = train.columns[feature]
    tree = fit_tree(train, target, others, max_depth, min_node_size)
    rules = _rules(tree)
    groups = tuple(
        GroupInfo(group_id=leaf.group_id, rule=rules[leaf.group_id], n_train=leaf.count)
        for leaf in tree.leaves())
    return SubgroupPartition(feature=feature, tree=tree, groups=groups,
                             max_depth=max_depth, min_node_size=min_node_size)


def assign_groups(part: SubgroupPartition, data: Dataset) -> np.ndarray:
    """Deterministic group id per row (`value <= threshold` routes left)."""
    return part.tree.route(data)


def describe_groups(part: SubgroupPartition) -> list[str]:
    """Human-readable, mutually exclusive and exhaustive rule strings."""
    return [g.rule for g in part.groups]


def single_group_partition(train: Dataset, feature: str) -> SubgroupPartition:
    """The trivial depth-0 partition (one group covering everything)."""
    return fit_partition(train, feature, max_depth=0)


def _node_to_json(node: Node):
    if node.is_leaf:
        return {"group_id": node.group_id, "n_k": node.count, "value": node.value}
    rec = {"split_feature": node.feature,
           "left": _node_to_json(node.left), "right": _node_to_json(node.right)}
    if node.level_set is not None:
        rec["level_set"] = sorted(node.level_set)
    else:
        rec["threshold"] = node.threshold
    return rec


def _node_from_json(rec) -> Node:
    if "group_id" in rec:
        return Node(group_id=rec["group_id"], count=rec["n_k"],
                    value=rec.get("value", 0.0))
    return Node(feature=rec["split_feature"],
                threshold=rec.get("threshold"),
                level_set=frozenset(rec["level_set"]) if "level_set" in rec else None,
                left=_node_from_json(rec["left"]),
                right=_node_from_json(rec["right"]))


def to_json(part: SubgroupPartition) -> str:
    payload = {
        "feature": part.feature,
        "max_depth": part.max_depth,
        "min_node_size": part.min_node_size,
        "predictors": list(part.tree.predictors),
        "known_levels": {k: sorted(v) for k, v in part.tree.known_levels.items()},
        "tree": _node_to_json(part.tree.root),
        "groups": [{"group_id": g.group_id, "n_k": g.n_train, "rule": g.rule}
                   for g in part.groups],
    }
    return json.dumps(payload, indent=2, sort_keys=True)


def from_json(text: str) -> SubgroupPartition:
    payload = json.loads(text)
    tree = Tree(root=_node_from_json(payload["tree"]),
                predictors=tuple(payload["predictors"]),
                known_levels={k: frozenset(v)
                              for k, v in payload["known_levels"].items()})
    groups = tuple(GroupInfo(g["group_id"], g["rule"], g["n_k"])
                   for g in payload["groups"])
    return SubgroupPartition(feature=payload["feature"], tree=tree, groups=groups,
                             max_depth=payload["max_depth"],
                             min_node_size=payload["min_node_size"])
