"""Feature-effect curves: PDP, subgroup PDPs, adjusted ALE, curve summaries.

Subgroup PDP curves are restricted to the interval actually covered by the
group's own feature values, which is what keeps them from extrapolating.
Quantiles everywhere use linear interpolation of order statistics (numpy's
default), since both the curve summaries and the ALE intervals depend on a
pinned quantile definition.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace

import numpy as np

from .data import CATEGORICAL, Dataset
from .errors import DataError
from .models import PredictiveModel
from .samplers import DEFAULT_ALE_INTERVALS, ale_shift
from .subgroups import SubgroupPartition, assign_groups

DEFAULT_GRID_SIZE = 20


@dataclass(frozen=True)
class EffectCurve:
    feature: str
    kind: str  # pdp | cs_pdp | ale
    grid: np.ndarray
    values: np.ndarray
    support: tuple[float, float]
    group_id: int | None = None
    rule: str | None = None
    n_rows: int = 0
    categorical_levels: tuple[str, ...] | None = None
    # boxplot-style annotations (set by summarize)
    q25: float | None = None
    q75: float | None = None
    whisker_lo: float | None = None
    whisker_hi: float | None = None
    outlier_grid: tuple[float, ...] = ()

    def __post_init__(self):
        if len(self.grid) != len(self.values):
            raise DataError("grid and values must have equal length")
        if self.categorical_levels is None and len(self.grid) > 1:
            if not np.all(np.diff(self.grid) > 0):
                raise DataError("grid must be strictly ascending")

    def interpolate(self, x: np.ndarray) -> np.ndarray:
        """Linear interpolation, clamped to the curve endpoints."""
        return np.interp(x, self.grid, self.values)


def make_grid(values: np.ndarray, grid_size: int = DEFAULT_GRID_SIZE,
              lo: float | None = None, hi: float | None = None) -> np.ndarray:
    lo = float(np.min(values)) if lo is None else lo
    hi = float(np.max(values)) if hi is None else hi
    if lo == hi:
        return np.array([lo])
    return np.linspace(lo, hi, grid_size)


def _pdp_values(model: PredictiveModel, data: Dataset, feature: str,
                grid: np.ndarray) -> np.ndarray:
    out = np.empty(len(grid))
    for i, x in enumerate(grid):
        col = np.full(data.n_rows, x, dtype=data.columns[feature].dtype)
        out[i] = float(np.mean(model.predict(data.with_column(feature, col))))
    return out


def pdp(model: PredictiveModel, test: Dataset, feature: str,
        grid: np.ndarray | None = None,
        grid_size: int = DEFAULT_GRID_SIZE) -> EffectCurve:
    """Monte Carlo partial dependence over all test rows."""
    if test.n_rows == 0:
        raise DataError("empty test set")
    if test.feature_types[feature] == CATEGORICAL:
        codes = np.arange(len(test.levels[feature]))
        values = _pdp_values(model, test, feature, codes)
        return EffectCurve(feature=feature, kind="pdp", grid=codes.astype(float),
                           values=values, support=(0.0, float(codes[-1])),
                           n_rows=test.n_rows,
                           categorical_levels=test.levels[feature])
    x = test.columns[feature].astype(float)
    if grid is None:
        grid = make_grid(x, grid_size)
    grid = np.asarray(grid, dtype=float)
    values = _pdp_values(model, test, feature, grid)
    return EffectCurve(feature=feature, kind="pdp", grid=grid, values=values,
                       support=(float(np.min(x)), float(np.max(x))),
                       n_rows=test.n_rows)


def cs_pdp(model: PredictiveModel, part: SubgroupPartition, test: Dataset,
           feature: str | None = None, grid: np.ndarray | None = None,
           grid_size: int = DEFAULT_GRID_SIZE) -> list[EffectCurve]:
    """One marginal PDP per subgroup, clipped to the group's own support.

    `feature` defaults to the partition's feature of interest but may name a
    different (even categorical) column whose effect is examined within the
    partition's groups.  Groups empty on the test data are omitted.
    """
    feature = part.feature if feature is None else feature
    group_ids = assign_groups(part, test)
    curves = []
    for info in part.groups:
        mask = group_ids == info.group_id
        if not np.any(mask):
            continue
        sub = test.take(np.nonzero(mask)[0])
        if test.feature_types[feature] == CATEGORICAL:
            curve = pdp(model, sub, feature)
        else:
            x = sub.columns[feature].astype(float)
            if grid is None:
                g = make_grid(x, grid_size)
            else:
                g = np.asarray(grid, dtype=float)
                g = g[(g >= np.min(x)) & (g <= np.max(x))]
                if len(g) == 0:
                    g = np.array([float(np.min(x))])
            curve = pdp(model, sub, feature, grid=g)
        curves.append(replace(curve, kind="cs_pdp", group_id=info.group_id,
                              rule=info.rule))
    return curves


def ale(model: PredictiveModel, train: Dataset, test: Dataset, feature: str,
        n_intervals: int = DEFAULT_ALE_INTERVALS) -> EffectCurve:
    """Adjusted accumulated local effects over train-quantile intervals.

    The raw ALE curve is centered to mean zero over the test rows, then the
    mean model prediction is added so it sits on the PDP scale.
    """
    if test.feature_types[feature] == CATEGORICAL:
        raise DataError("ALE requires a numeric feature")
    shift = ale_shift(train, test, feature, n_intervals)
    edges = shift.edges
    diffs = model.predict(shift.upper) - model.predict(shift.lower)
    n_int = len(edges) - 1
    local = np.zeros(n_int)
    for k in range(n_int):
        mask = shift.interval_ids == k
        if np.any(mask):
            local[k] = float(np.mean(diffs[mask]))
    accumulated = np.concatenate([[0.0], np.cumsum(local)])
    x = test.columns[feature].astype(float)
    at_rows = np.interp(x, edges, accumulated)
    mean_pred = float(np.mean(model.predict(test)))
    values = accumulated - float(np.mean(at_rows)) + mean_pred
    return EffectCurve(feature=feature, kind="ale", grid=edges, values=values,
                       support=(float(edges[0]), float(edges[-1])),
                       n_rows=test.n_rows)


def boxplot_summary(curve: EffectCurve, x_sample: np.ndarray) -> EffectCurve:
    """Annotate a curve with boxplot-style spans of the feature sample.

    The bold span is [q25, q75]; whiskers extend by 1.58 * IQR / sqrt(n) on
    each side, capped to the observed min/max.  Grid points outside the
    whiskers are flagged as outliers.
    """
    x = np.asarray(x_sample, dtype=float)
    if len(x) < 1:
        raise DataError("x_sample must be non-empty")
    q25 = float(np.quantile(x, 0.25))
    q75 = float(np.quantile(x, 0.75))
    iqr = q75 - q25
    margin = 1.58 * iqr / np.sqrt(len(x))
    lo = max(float(np.min(x)), q25 - margin)
    hi = min(float(np.max(x)), q75 + margin)
    outliers = tuple(float(g) for g in curve.grid if g < lo or g > hi)
    return replace(curve, q25=q25, q75=q75, whisker_lo=lo, whisker_hi=hi,
                   outlier_grid=outliers)


def pooled_weighted_average(curves: list[EffectCurve], x: float) -> float:
    """n_k-weighted pointwise average of subgroup curves at a grid point."""
    total = 0.0
    weight = 0
    for c in curves:
        total += c.n_rows * float(np.interp(x, c.grid, c.values))
        weight += c.n_rows
    return total / weight


def curves_to_csv(curves: list[EffectCurve]) -> str:
    """Serialize curves as grid,value,group_id rows."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["feature", "kind", "grid", "value", "group_id", "rule"])
    for c in curves:
        for g, v in zip(c.grid, c.values):
            label = g
            if c.categorical_levels is not None:
                label = c.categorical_levels[int(g)]
            writer.writerow([c.feature, c.kind, label, repr(float(v)),
                             "" if c.group_id is None else c.group_id,
                             c.rule or ""])
    return buf.getvalue()


def curves_to_svg(curves: list[EffectCurve], width: int = 640,
                  height: int = 480) -> str:
    """Minimal single-file SVG: one polyline per curve, bold quartile span."""
    pad = 40
    xs = np.concatenate([c.grid for c in curves])
    ys = np.concatenate([c.values for c in curves])
    x0, x1 = float(np.min(xs)), float(np.max(xs))
    y0, y1 = float(np.min(ys)), float(np.max(ys))
    xr = (x1 - x0) or 1.0
    yr = (y1 - y0) or 1.0

    def sx(v):
        return pad + (v - x0) / xr * (width - 2 * pad)

    def sy(v):
        return height - pad - (v - y0) / yr * (height - 2 * pad)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
             f'height="{height}">']
    palette = ["#1b6ca8", "#c0392b", "#1e8449", "#8e44ad", "#b7950b", "#34495e"]
    for i, c in enumerate(curves):
        color = palette[i % len(palette)]
        pts = " ".join(f"{sx(g):.2f},{sy(v):.2f}" for g, v in zip(c.grid, c.values))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                     f'points="{pts}"/>')
        if c.q25 is not None and c.q75 is not None:
            mask = (c.grid >= c.q25) & (c.grid <= c.q75)
            if np.sum(mask) >= 2:
                # bold sub-span as a path so polyline count == curve count
                coords = [f"{sx(g):.2f} {sy(v):.2f}"
                          for g, v in zip(c.grid[mask], c.values[mask])]
                d = "M " + " L ".join(coords)
                parts.append(f'<path fill="none" stroke="{color}" '
                             f'stroke-width="4" d="{d}"/>')
        if c.rule:
            parts.append(f'<text x="{pad}" y="{14 + 14 * i}" fill="{color}" '
                         f'font-size="11">{_escape(c.rule)}</text>')
    parts.append("</svg>")
    return "\n".join(parts)


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
