"""Tabular input handling: CSV loading, discretization, encoding, seeded splits.

Everything downstream works on integer-coded `Dataset` objects. This module
owns the boundary between raw CSV text and that representation, plus the
deterministic train/test split machinery used by the evaluation harness.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from bisect import bisect_left
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, DataError

NUMERIC = "numeric"
CATEGORICAL = "categorical"

_MASK64 = (1 << 64) - 1


def derive_seed(master_seed: int, *indices: int) -> int:
    """Mix a master seed with stream indices into an independent 64-bit seed.

    Pure integer hashing (splitmix-style finalizer per index), so the same
    inputs always yield the same seed on every platform.
    """
    z = master_seed & _MASK64
    for index in indices:
        z = (z + ((index & _MASK64) + 1) * 0x9E3779B97F4A7C15) & _MASK64
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        z ^= z >> 31
    return z


@dataclass(frozen=True)
class Schema:
    """Shape of an encoded dataset: named discrete predictors plus a class variable."""

    predictor_names: tuple[str, ...]
    predictor_arities: tuple[int, ...]
    class_name: str
    class_arity: int

    def __post_init__(self) -> None:
        if len(self.predictor_names) != len(self.predictor_arities):
            raise ValueError("predictor names and arities must have equal length")
        if any(a < 1 for a in self.predictor_arities):
            raise ValueError("predictor arities must be >= 1")
        if self.class_arity < 2:
            raise ValueError("class arity must be >= 2")
        if len(set(self.predictor_names)) != len(self.predictor_names):
            raise ValueError("predictor names must be distinct")

    @property
    def n_predictors(self) -> int:
        return len(self.predictor_names)

    def to_json_dict(self) -> dict:
        return {
            "predictor_names": list(self.predictor_names),
            "predictor_arities": list(self.predictor_arities),
            "class_name": self.class_name,
            "class_arity": self.class_arity,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "Schema":
        return cls(
            tuple(d["predictor_names"]),
            tuple(int(a) for a in d["predictor_arities"]),
            d["class_name"],
            int(d["class_arity"]),
        )


@dataclass(frozen=True, eq=False)
class Dataset:
    """Encoded table: integer predictor values and class labels under a schema.

    Arrays are stored read-only; treat instances as immutable values.
    """

    schema: Schema
    rows: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        rows = np.ascontiguousarray(np.asarray(self.rows, dtype=np.int64))
        labels = np.ascontiguousarray(np.asarray(self.labels, dtype=np.int64))
        if rows.ndim != 2 or rows.shape[1] != self.schema.n_predictors:
            raise ValueError("rows must be a 2-d array with one column per predictor")
        if labels.ndim != 1 or labels.shape[0] != rows.shape[0]:
            raise ValueError("labels must be a 1-d array aligned with rows")
        if labels.size:
            if labels.min() < 0 or labels.max() >= self.schema.class_arity:
                raise ValueError("label index outside class arity")
        if rows.size:
            arities = np.asarray(self.schema.predictor_arities, dtype=np.int64)
            if rows.min() < 0 or (rows >= arities).any():
                raise ValueError("predictor value index outside its arity")
        rows.flags.writeable = False
        labels.flags.writeable = False
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "labels", labels)

    @property
    def n_rows(self) -> int:
        return int(self.labels.shape[0])

    def take(self, indices: np.ndarray) -> "Dataset":
        return Dataset(self.schema, self.rows[indices], self.labels[indices])

    def digest(self) -> str:
        """Stable content hash over schema, rows, and labels."""
        h = hashlib.sha256()
        h.update(json.dumps(self.schema.to_json_dict(), sort_keys=True).encode())
        h.update(self.rows.tobytes())
        h.update(self.labels.tobytes())
        return h.hexdigest()


@dataclass
class RawColumn:
    name: str
    kind: str  # NUMERIC or CATEGORICAL
    values: list

    def select(self, indices: Iterable[int]) -> "RawColumn":
        return RawColumn(self.name, self.kind, [self.values[i] for i in indices])


@dataclass
class RawTable:
    """Parsed CSV with the class column extracted from the predictors."""

    predictors: list[RawColumn]
    class_column: RawColumn

    @property
    def n_rows(self) -> int:
        return len(self.class_column.values)

    def select(self, indices: Iterable[int]) -> "RawTable":
        idx = list(indices)
        return RawTable(
            [c.select(idx) for c in self.predictors],
            self.class_column.select(idx),
        )


def _looks_numeric(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def _read_text(source) -> io.TextIOBase:
    if isinstance(source, (str, Path)):
        try:
            return open(source, "r", newline="", encoding="utf-8")
        except OSError as exc:
            raise DataError(f"cannot read {source}: {exc}") from exc
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8"))
    if isinstance(source, io.TextIOBase):
        return source
    # binary stream
    return io.TextIOWrapper(source, encoding="utf-8", newline="")


def load_csv(source, class_column: str) -> RawTable:
    """Parse CSV bytes/path into a raw table, separating out the class column.

    The header row is mandatory. A column is numeric when every one of its
    cells parses as a number with '.' as the decimal separator; otherwise it
    is categorical. Rows with missing (empty) cells are rejected outright so
    they cannot silently skew counts downstream.
    """
    stream = _read_text(source)
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("empty CSV: missing header row") from None
    header = [h.strip() for h in header]
    if len(set(header)) != len(header):
        raise DataError("duplicate column names in header")
    if class_column not in header:
        raise DataError(f"unknown class column {class_column!r}")

    columns: list[list[str]] = [[] for _ in header]
    for row in reader:
        line = reader.line_num
        if len(row) != len(header):
            raise DataError(
                f"line {line}: row has {len(row)} fields, expected {len(header)}"
            )
        for j, cell in enumerate(row):
            if cell.strip() == "":
                raise DataError(f"line {line}: empty cell in column {header[j]!r}")
            columns[j].append(cell.strip())

    class_idx = header.index(class_column)
    predictors = []
    for name, cells in zip(header, columns):
        if name == class_column:
            continue
        if cells and all(_looks_numeric(c) for c in cells):
            predictors.append(RawColumn(name, NUMERIC, [float(c) for c in cells]))
        else:
            predictors.append(RawColumn(name, CATEGORICAL, cells))
    # class values stay raw strings; they are encoded by first appearance later
    return RawTable(predictors, RawColumn(class_column, CATEGORICAL, columns[class_idx]))


def fit_equal_frequency(values: Sequence[float], bins: int) -> list[float]:
    """Pick cut points at order statistics giving near-equal bin occupancy.

    A cut point is the inclusive upper edge of its bin. Tied values are never
    split across a boundary: a boundary landing inside a run of equal values
    slides to the end of that run. Degenerate inputs simply collapse to fewer
    bins, so the result has at most ``bins - 1`` strictly increasing cuts.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    if len(values) == 0:
        raise ValueError("values must be nonempty")
    ordered = sorted(float(v) for v in values)
    n = len(ordered)
    cuts: list[float] = []
    for t in range(1, bins):
        edge = (t * n) // bins
        if edge <= 0:
            continue
        while edge < n and ordered[edge - 1] == ordered[edge]:
            edge += 1
        if edge >= n:
            continue
        cut = ordered[edge - 1]
        if not cuts or cut > cuts[-1]:
            cuts.append(cut)
    return cuts


def bin_index(value: float, cuts: Sequence[float]) -> int:
    """Map a real value to its bin: count of cut points strictly below it."""
    return bisect_left(cuts, value)


@dataclass(frozen=True)
class DiscretizationSpec:
    """Ordered cut points per numeric column; ``bins`` is the requested count."""

    cut_points: dict[str, tuple[float, ...]]
    bins: int = 3

    def __post_init__(self) -> None:
        if self.bins < 1:
            raise ValueError("bins must be >= 1")
        clean = {}
        for name, cuts in self.cut_points.items():
            cuts = tuple(float(c) for c in cuts)
            if any(b <= a for a, b in zip(cuts, cuts[1:])):
                raise ValueError(f"cut points for {name!r} must be strictly increasing")
            if len(cuts) > self.bins - 1:
                raise ValueError(f"column {name!r} has more than bins-1 cut points")
            clean[name] = cuts
        object.__setattr__(self, "cut_points", clean)

    def to_json_dict(self) -> dict:
        return {
            "bins": self.bins,
            "cut_points": {k: list(v) for k, v in sorted(self.cut_points.items())},
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "DiscretizationSpec":
        return cls({k: tuple(v) for k, v in d["cut_points"].items()}, int(d["bins"]))


def fit_discretization(raw: RawTable, bins: int = 3) -> DiscretizationSpec:
    """Fit equal-frequency cuts for every numeric predictor column."""
    cuts = {}
    for col in raw.predictors:
        if col.kind == NUMERIC:
            cuts[col.name] = tuple(fit_equal_frequency(col.values, bins))
    return DiscretizationSpec(cuts, bins)


@dataclass
class DatasetEncoder:
    """Frozen mapping from raw column values to integer codes.

    Categorical levels (and class values) are indexed in first-appearance
    order; numeric columns go through their discretization cuts. The encoder
    is serializable so a trained model can encode future rows identically.
    Unseen categorical values encode to the out-of-range index ``arity``,
    which classifiers treat as a never-observed value.
    """

    predictor_names: tuple[str, ...]
    kinds: tuple[str, ...]
    discretization: DiscretizationSpec
    categories: dict[str, tuple[str, ...]]
    class_name: str
    class_values: tuple[str, ...]

    @classmethod
    def fit(
        cls,
        raw: RawTable,
        spec: DiscretizationSpec,
        class_values: tuple[str, ...] | None = None,
    ) -> "DatasetEncoder":
        """Learn category orders from `raw`; `class_values` may be pinned externally."""
        categories = {}
        for col in raw.predictors:
            if col.kind == NUMERIC:
                if col.name not in spec.cut_points:
                    raise ConfigError(f"no cut points for numeric column {col.name!r}")
            else:
                categories[col.name] = tuple(dict.fromkeys(col.values))
        if class_values is None:
            class_values = tuple(dict.fromkeys(raw.class_column.values))
        return cls(
            tuple(c.name for c in raw.predictors),
            tuple(c.kind for c in raw.predictors),
            spec,
            categories,
            raw.class_column.name,
            class_values,
        )

    def schema(self) -> Schema:
        arities = []
        for name, kind in zip(self.predictor_names, self.kinds):
            if kind == NUMERIC:
                arities.append(len(self.discretization.cut_points[name]) + 1)
            else:
                # floor of 1 keeps empty tables representable
                arities.append(max(len(self.categories[name]), 1))
        return Schema(
            self.predictor_names,
            tuple(arities),
            self.class_name,
            max(len(self.class_values), 2),
        )

    def encode_value(self, name: str, kind: str, value) -> int:
        if kind == NUMERIC:
            return bin_index(float(value), self.discretization.cut_points[name])
        levels = self.categories[name]
        try:
            return levels.index(str(value))
        except ValueError:
            return len(levels)  # out-of-range sentinel for unseen levels

    def encode_class_value(self, value: str) -> int:
        try:
            return self.class_values.index(str(value))
        except ValueError:
            raise DataError(f"unseen class value {value!r}") from None

    def encode_predictor_rows(self, raw: RawTable) -> np.ndarray:
        """Encode predictor columns only; may contain out-of-range sentinels."""
        by_name = {c.name: c for c in raw.predictors}
        cols = []
        for name, kind in zip(self.predictor_names, self.kinds):
            if name not in by_name:
                raise DataError(f"missing predictor column {name!r}")
            col = by_name[name]
            cols.append([self.encode_value(name, kind, v) for v in col.values])
        if not cols:
            return np.zeros((raw.n_rows, 0), dtype=np.int64)
        return np.array(cols, dtype=np.int64).T

    def encode_table(self, raw: RawTable) -> Dataset:
        rows = self.encode_predictor_rows(raw)
        labels = np.array(
            [self.encode_class_value(v) for v in raw.class_column.values],
            dtype=np.int64,
        )
        return Dataset(self.schema(), rows, labels)

    def to_json_dict(self) -> dict:
        return {
            "predictor_names": list(self.predictor_names),
            "kinds": list(self.kinds),
            "discretization": self.discretization.to_json_dict(),
            "categories": {k: list(v) for k, v in sorted(self.categories.items())},
            "class_name": self.class_name,
            "class_values": list(self.class_values),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "DatasetEncoder":
        return cls(
            tuple(d["predictor_names"]),
            tuple(d["kinds"]),
            DiscretizationSpec.from_json_dict(d["discretization"]),
            {k: tuple(v) for k, v in d["categories"].items()},
            d["class_name"],
            tuple(d["class_values"]),
        )


def encode(raw: RawTable, spec: DiscretizationSpec) -> Dataset:
    """Encode a raw table with cuts from `spec` and categories fit on `raw` itself."""
    return DatasetEncoder.fit(raw, spec).encode_table(raw)


@dataclass(frozen=True)
class SplitPlan:
    """Deterministic recipe for one train/test split of a dataset."""

    train_fraction: float = 0.75
    master_seed: int = 1
    trial_index: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie strictly between 0 and 1")
        if self.trial_index < 0:
            raise ValueError("trial_index must be >= 0")

    def trial_seed(self) -> int:
        return derive_seed(self.master_seed, self.trial_index)


def split_indices(n_rows: int, plan: SplitPlan) -> tuple[np.ndarray, np.ndarray]:
    """Seeded uniform permutation of row indices, cut at ceil(fraction * N)."""
    if n_rows < 2:
        raise DataError("need at least 2 rows to split")
    rng = np.random.default_rng(plan.trial_seed())
    perm = rng.permutation(n_rows)
    n_train = math.ceil(plan.train_fraction * n_rows)
    return perm[:n_train], perm[n_train:]


def split(data: Dataset, plan: SplitPlan) -> tuple[Dataset, Dataset]:
    train_idx, test_idx = split_indices(data.n_rows, plan)
    return data.take(train_idx), data.take(test_idx)
