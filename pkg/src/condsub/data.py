"""Column-oriented dataset container, CSV ingestion and deterministic splits.

Numeric columns are stored as float64 arrays, categorical columns as int64
level codes with a closed level table fixed at load time.  Datasets are
immutable; every transformation returns a new instance.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DataError, LoadError
from .rng import rng_for

NUMERIC = "numeric"
CATEGORICAL = "categorical"


@dataclass(frozen=True)
class Dataset:
    feature_names: tuple[str, ...]
    feature_types: dict[str, str]
    columns: dict[str, np.ndarray] = field(repr=False)
    levels: dict[str, tuple[str, ...]] = field(default_factory=dict, repr=False)
    target: np.ndarray | None = field(default=None, repr=False)
    target_name: str | None = None

    def __post_init__(self):
        n = self.n_rows
        for name in self.feature_names:
            if len(self.columns[name]) != n:
                raise DataError(f"column {name!r} has wrong length")
        if self.target is not None and len(self.target) != n:
            raise DataError("target has wrong length")
        if len(set(self.feature_names)) != len(self.feature_names):
            raise DataError("duplicate feature names")

    @property
    def n_rows(self) -> int:
        if not self.feature_names:
            return 0 if self.target is None else len(self.target)
        return len(self.columns[self.feature_names[0]])

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def numeric_features(self) -> tuple[str, ...]:
        return tuple(n for n in self.feature_names if self.feature_types[n] == NUMERIC)

    def is_numeric(self, name: str) -> bool:
        return self.feature_types[name] == NUMERIC

    def matrix(self, names=None) -> np.ndarray:
        """Feature matrix with categorical columns as level codes."""
        names = self.feature_names if names is None else tuple(names)
        if not names:
            return np.empty((self.n_rows, 0))
        return np.column_stack([np.asarray(self.columns[n], dtype=float) for n in names])

    def take(self, indices) -> "Dataset":
        idx = np.asarray(indices)
        cols = {n: self.columns[n][idx] for n in self.feature_names}
        tgt = self.target[idx] if self.target is not None else None
        return replace(self, columns=cols, target=tgt)

    def with_column(self, name: str, values: np.ndarray) -> "Dataset":
        if name not in self.columns:
            raise DataError(f"unknown column {name!r}")
        values = np.asarray(values)
        if len(values) != self.n_rows:
            raise DataError("replacement column has wrong length")
        cols = dict(self.columns)
        cols[name] = values
        return replace(self, columns=cols)

    def drop_target(self) -> "Dataset":
        return replace(self, target=None, target_name=None)

    def select(self, names) -> "Dataset":
        names = tuple(names)
        return Dataset(
            feature_names=names,
            feature_types={n: self.feature_types[n] for n in names},
            columns={n: self.columns[n] for n in names},
            levels={n: self.levels[n] for n in names if n in self.levels},
            target=self.target,
            target_name=self.target_name,
        )

    def decode(self, name: str) -> np.ndarray:
        """Column values with categorical codes mapped back to level strings."""
        if self.is_numeric(name):
            return self.columns[name]
        table = np.asarray(self.levels[name], dtype=object)
        return table[self.columns[name]]


@dataclass(frozen=True)
class SplitSpec:
    fractions: tuple[float, ...]
    seed: int

    def __post_init__(self):
        if any(f < 0 for f in self.fractions):
            raise DataError("split fractions must be non-negative")
        if abs(sum(self.fractions) - 1.0) > 1e-12:
            raise DataError(f"split fractions sum to {sum(self.fractions)}, not 1")


def _parse_numeric(text: str):
    try:
        return float(text)
    except ValueError:
        return None


def read_schema(path) -> dict[str, str]:
    """Read a `name:type` schema file (type in {numeric, categorical})."""
    schema = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if ":" not in line:
                raise LoadError(f"schema line {lineno}: expected name:type")
            name, _, kind = line.partition(":")
            name, kind = name.strip(), kind.strip()
            if kind not in (NUMERIC, CATEGORICAL):
                raise LoadError(f"schema line {lineno}: unknown type {kind!r}")
            schema[name] = kind
    return schema


def load_csv(path, schema: dict[str, str] | None = None, target: str | None = None) -> Dataset:
    """Load an RFC-4180 CSV with a mandatory header row.

    Column types are taken from `schema` where declared, otherwise inferred:
    numeric if every entry parses as a decimal, else categorical.  Missing
    values, ragged rows, unparseable declared-numeric cells and duplicate
    column names are distinct load errors.
    """
    schema = dict(schema or {})
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise LoadError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise LoadError(f"{path}: empty file, header row required") from None
        if len(set(header)) != len(header):
            dupes = sorted({h for h in header if header.count(h) > 1})
            raise LoadError(f"{path}: duplicate column name(s) {dupes}")
        raw = {name: [] for name in header}
        for rownum, row in enumerate(reader, 1):
            if len(row) != len(header):
                raise LoadError(f"{path}: ragged row {rownum} "
                                f"({len(row)} cells, expected {len(header)})")
            for name, cell in zip(header, row):
                if cell == "":
                    raise LoadError(f"missing value at (row {rownum}, col {name!r})")
                raw[name].append(cell)

    unknown = set(schema) - set(header)
    if unknown:
        raise LoadError(f"schema declares unknown column(s) {sorted(unknown)}")
    if target is not None and target not in header:
        raise LoadError(f"target column {target!r} not in header")

    columns: dict[str, np.ndarray] = {}
    levels: dict[str, tuple[str, ...]] = {}
    types: dict[str, str] = {}
    for name in header:
        cells = raw[name]
        parsed = [_parse_numeric(c) for c in cells]
        declared = schema.get(name)
        if declared == NUMERIC or (declared is None and all(v is not None for v in parsed)):
            bad = next((i for i, v in enumerate(parsed) if v is None), None)
            if bad is not None:
                raise LoadError(f"unparseable cell at (row {bad + 1}, col {name!r}): "
                                f"{cells[bad]!r} is not numeric")
            columns[name] = np.array(parsed, dtype=float)
            types[name] = NUMERIC
        else:
            table = tuple(sorted(set(cells)))
            index = {lvl: i for i, lvl in enumerate(table)}
            columns[name] = np.array([index[c] for c in cells], dtype=np.int64)
            levels[name] = table
            types[name] = CATEGORICAL

    tgt = None
    features = tuple(h for h in header if h != target)
    if target is not None:
        if types[target] != NUMERIC:
            raise LoadError(f"target column {target!r} must be numeric")
        tgt = columns.pop(target)
        types.pop(target)

    return Dataset(
        feature_names=features,
        feature_types=types,
        columns=columns,
        levels=levels,
        target=tgt,
        target_name=target,
    )


def write_csv(d: Dataset, path) -> None:
    """Write a dataset back to CSV; floats use repr so reload round-trips."""
    header = list(d.feature_names)
    if d.target is not None:
        header.append(d.target_name)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        decoded = [d.decode(n) for n in d.feature_names]
        if d.target is not None:
            decoded.append(d.target)
        for i in range(d.n_rows):
            writer.writerow([repr(float(c[i])) if isinstance(c[i], (float, np.floating))
                             else str(c[i]) for c in decoded])


def split(d: Dataset, spec: SplitSpec) -> list[Dataset]:
    """Disjoint row partition with floor-allocated sizes.

    Remainder rows go to the earliest parts; identical seeds give identical
    splits.  Row order inside each part follows the original dataset.
    """
    n = d.n_rows
    sizes = [int(np.floor(f * n)) for f in spec.fractions]
    remainder = n - sum(sizes)
    for i in range(remainder):
        sizes[i % len(sizes)] += 1
    perm = rng_for(spec.seed).permutation(n)
    parts, start = [], 0
    for size in sizes:
        idx = np.sort(perm[start:start + size])
        parts.append(d.take(idx))
        start += size
    return parts


def subsample(d: Dataset, max_rows: int, seed: int) -> Dataset:
    """Draw min(max_rows, n) rows without replacement, deterministic in seed."""
    if max_rows < 1:
        raise DataError("max_rows must be >= 1")
    n = d.n_rows
    if n <= max_rows:
        return d
    idx = np.sort(rng_for(seed).choice(n, size=max_rows, replace=False))
    return d.take(idx)


def standardize(d: Dataset, stats: dict[str, tuple[float, float]] | None = None):
    """Map each numeric column to mean 0, sd 1.

    Returns (dataset, stats).  When `stats` is given (e.g., computed on a
    reference split), those statistics are applied instead of the dataset's
    own.  Constant columns keep sd 1 to avoid division by zero.
    """
    if stats is None:
        stats = {}
        for name in d.numeric_features():
            col = d.columns[name]
            sd = float(np.std(col))
            stats[name] = (float(np.mean(col)), sd if sd > 0 else 1.0)
    out = d
    for name in d.numeric_features():
        mean, sd = stats[name]
        out = out.with_column(name, (d.columns[name] - mean) / sd)
    return out, stats


def from_arrays(names, arrays, types=None, levels=None, target=None,
                target_name="y") -> Dataset:
    """Convenience constructor used by the simulation module and tests."""
    names = tuple(names)
    columns = {}
    levels = dict(levels or {})
    inferred = {}
    for n, a in zip(names, arrays):
        arr = np.asarray(a)
        if arr.dtype.kind in "fiu":
            columns[n] = arr
            inferred[n] = NUMERIC
        else:
            uniq = sorted({str(v) for v in arr})
            table = {v: i for i, v in enumerate(uniq)}
            columns[n] = np.array([table[str(v)] for v in arr], dtype=np.int64)
            levels.setdefault(n, tuple(uniq))
            inferred[n] = CATEGORICAL
    types = dict(types or inferred)
    return Dataset(
        feature_names=names,
        feature_types=types,
        columns=columns,
        levels=levels,
        target=None if target is None else np.asarray(target, dtype=float),
        target_name=target_name if target is not None else None,
    )
