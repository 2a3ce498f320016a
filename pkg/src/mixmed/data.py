"""Dataset model, CSV ingestion, standardization and splitting.

A :class:`Dataset` is an immutable bundle of numeric arrays with one role
per column: an n x p exposure matrix, one mediator, one outcome, and an
n x s confounder matrix (s may be 0). Categorical confounders are
dummy-coded at load time; rows containing missing values are dropped and
counted (listwise deletion).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import (
    DataError,
    DegenerateColumnError,
    InsufficientDataError,
    ParseError,
    SchemaError,
)
from .rng import as_generator

MISSING_TOKENS = frozenset({"", "NA", "N/A", "NaN", "nan", "null", "NULL"})


@dataclass(frozen=True)
class ColumnSchema:
    """Role mapping from CSV header names to dataset roles."""

    exposures: tuple[str, ...]
    mediator: str
    outcome: str
    confounders: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "exposures", tuple(self.exposures))
        object.__setattr__(self, "confounders", tuple(self.confounders))
        names = list(self.exposures) + [self.mediator, self.outcome] + list(self.confounders)
        if len(set(names)) != len(names):
            raise SchemaError(f"duplicate column role assignment in {names}")
        if not self.exposures:
            raise SchemaError("at least one exposure column is required")


@dataclass(frozen=True)
class Contrast:
    """Reference and comparative levels for an effect contrast.

    Both levels live on the effective exposure scale of the pipeline at
    hand: the p exposures for joint shifts, a single PC score, or a scalar
    risk score.
    """

    reference: np.ndarray
    comparative: np.ndarray

    def __post_init__(self):
        ref = np.atleast_1d(np.asarray(self.reference, dtype=float))
        comp = np.atleast_1d(np.asarray(self.comparative, dtype=float))
        if ref.shape != comp.shape or ref.ndim != 1:
            raise ValueError(
                f"contrast levels must be equal-length vectors, got {ref.shape} vs {comp.shape}"
            )
        object.__setattr__(self, "reference", ref)
        object.__setattr__(self, "comparative", comp)

    @property
    def delta(self) -> np.ndarray:
        return self.comparative - self.reference

    @classmethod
    def unit(cls, dim: int = 1) -> "Contrast":
        """0 -> 1 shift in every coordinate."""
        return cls(np.zeros(dim), np.ones(dim))


@dataclass(frozen=True)
class Dataset:
    """Column-typed analysis table. Immutable and safe to share."""

    exposures: np.ndarray
    mediator: np.ndarray
    outcome: np.ndarray
    confounders: np.ndarray
    exposure_names: tuple[str, ...]
    confounder_names: tuple[str, ...] = ()
    mediator_name: str = "M"
    outcome_name: str = "Y"
    n_dropped: int = 0

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.exposures, dtype=float))
        if np.asarray(self.exposures).ndim == 1:
            X = X.T
        C = np.asarray(self.confounders, dtype=float)
        if C.size == 0:
            C = np.empty((X.shape[0], 0))
        elif C.ndim == 1:
            C = C[:, None]
        m = np.asarray(self.mediator, dtype=float).ravel()
        y = np.asarray(self.outcome, dtype=float).ravel()
        object.__setattr__(self, "exposures", X)
        object.__setattr__(self, "mediator", m)
        object.__setattr__(self, "outcome", y)
        object.__setattr__(self, "confounders", C)
        object.__setattr__(self, "exposure_names", tuple(self.exposure_names))
        object.__setattr__(self, "confounder_names", tuple(self.confounder_names))
        n = X.shape[0]
        if n < 2:
            raise InsufficientDataError(f"need at least 2 rows, got {n}")
        for label, arr in (("mediator", m), ("outcome", y), ("confounders", C)):
            if arr.shape[0] != n:
                raise ValueError(f"{label} has {arr.shape[0]} rows, exposures have {n}")
        if len(self.exposure_names) != X.shape[1]:
            raise ValueError("exposure_names length does not match exposure columns")
        if len(self.confounder_names) != C.shape[1]:
            raise ValueError("confounder_names length does not match confounder columns")
        for label, arr in (
            ("exposures", X),
            ("mediator", m),
            ("outcome", y),
            ("confounders", C),
        ):
            if arr.size and not np.all(np.isfinite(arr)):
                raise ValueError(f"{label} contains non-finite values after ingestion")
        for arr in (X, m, y, C):
            arr.setflags(write=False)

    @property
    def n(self) -> int:
        return self.exposures.shape[0]

    @property
    def p(self) -> int:
        return self.exposures.shape[1]

    @property
    def s(self) -> int:
        return self.confounders.shape[1]

    def subset(self, rows: np.ndarray) -> "Dataset":
        """Dataset restricted to the given row indices (order preserved)."""
        rows = np.asarray(rows, dtype=int)
        return Dataset(
            exposures=self.exposures[rows],
            mediator=self.mediator[rows],
            outcome=self.outcome[rows],
            confounders=self.confounders[rows],
            exposure_names=self.exposure_names,
            confounder_names=self.confounder_names,
            mediator_name=self.mediator_name,
            outcome_name=self.outcome_name,
        )


def _parse_numeric(cell: str, row: int, column: str) -> float:
    try:
        return float(cell)
    except ValueError:
        raise ParseError(
            f"non-numeric value {cell!r} in column {column!r} at data row {row}",
            row=row,
            column=column,
        ) from None


def load_dataset(path, schema: ColumnSchema) -> Dataset:
    """Load a CSV file into a Dataset according to a role schema.

    Exposures, mediator and outcome must be numeric. A confounder column is
    treated as numeric when every non-missing cell parses as a float, and as
    categorical otherwise; categorical columns are expanded into dummy
    indicators with the alphabetically first level as the reference.
    Rows with a missing value in any used column are dropped and counted.
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except FileNotFoundError:
        raise DataError(f"data file not found: {path}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, header row required") from None
        rows = [row for row in reader if row]

    used = list(schema.exposures) + [schema.mediator, schema.outcome] + list(schema.confounders)
    missing_cols = [name for name in used if name not in header]
    if missing_cols:
        raise SchemaError(f"{path}: columns {missing_cols} not found in header {header}")
    col_idx = {name: header.index(name) for name in used}

    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise ParseError(
                f"{path}: data row {i} has {len(row)} fields, header has {len(header)}",
                row=i,
            )

    def cells(name):
        j = col_idx[name]
        return [row[j].strip() for row in rows]

    # Row mask: keep rows complete in every used column.
    keep = np.ones(len(rows), dtype=bool)
    for name in used:
        for i, cell in enumerate(cells(name)):
            if cell in MISSING_TOKENS:
                keep[i] = False
    kept = np.flatnonzero(keep)
    n_dropped = len(rows) - kept.size
    if kept.size < 2:
        raise InsufficientDataError(
            f"{path}: {kept.size} complete rows remain after dropping {n_dropped}"
        )

    def numeric_column(name):
        vals = cells(name)
        return np.array([_parse_numeric(vals[i], i, name) for i in kept])

    X = np.column_stack([numeric_column(name) for name in schema.exposures])
    mediator = numeric_column(schema.mediator)
    outcome = numeric_column(schema.outcome)

    conf_cols, conf_names = [], []
    for name in schema.confounders:
        vals = [cells(name)[i] for i in kept]
        try:
            col = np.array([float(v) for v in vals])
            conf_cols.append(col)
            conf_names.append(name)
        except ValueError:
            levels = sorted(set(vals))
            for level in levels[1:]:  # first level is the reference
                conf_cols.append(np.array([1.0 if v == level else 0.0 for v in vals]))
                conf_names.append(f"{name}={level}")
    C = np.column_stack(conf_cols) if conf_cols else np.empty((kept.size, 0))

    return Dataset(
        exposures=X,
        mediator=mediator,
        outcome=outcome,
        confounders=C,
        exposure_names=schema.exposures,
        confounder_names=tuple(conf_names),
        mediator_name=schema.mediator,
        outcome_name=schema.outcome,
        n_dropped=n_dropped,
    )


def write_dataset(data: Dataset, path) -> None:
    """Write a Dataset back to CSV (exposures, mediator, outcome, confounders)."""
    names = (
        list(data.exposure_names)
        + [data.mediator_name, data.outcome_name]
        + list(data.confounder_names)
    )
    mat = np.column_stack(
        [data.exposures, data.mediator[:, None], data.outcome[:, None], data.confounders]
    )
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for row in mat:
            writer.writerow([repr(float(v)) for v in row])


def standardize(matrix: np.ndarray, names=None):
    """Center and scale columns to mean 0, sample sd 1 (n-1 denominator).

    Returns ``(standardized, means, sds)``; means and sds allow exact
    back-transformation. A zero-variance column raises
    :class:`DegenerateColumnError` naming the offender.
    """
    Z = np.atleast_2d(np.asarray(matrix, dtype=float))
    if np.asarray(matrix).ndim == 1:
        Z = Z.T
    if Z.shape[0] < 2:
        raise InsufficientDataError("standardize requires at least 2 rows")
    means = Z.mean(axis=0)
    sds = Z.std(axis=0, ddof=1)
    bad = np.flatnonzero(sds == 0)
    if bad.size:
        j = int(bad[0])
        label = names[j] if names is not None else f"column {j}"
        raise DegenerateColumnError(f"{label} has zero variance")
    return (Z - means) / sds, means, sds


def split_indices(n: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Row indices of a deterministic train/analysis partition of ``range(n)``."""
    if n < 4:
        raise InsufficientDataError(f"split requires n >= 4, got {n}")
    gen = as_generator(rng)
    perm = gen.permutation(n)
    n_train = n // 2
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def split_train_analysis(data: Dataset, rng) -> tuple[Dataset, Dataset]:
    """Random disjoint split into train (floor(n/2) rows) and analysis sets.

    The partition is exhaustive and deterministic under the seed; row order
    within each part follows the original dataset.
    """
    train_rows, analysis_rows = split_indices(data.n, rng)
    return data.subset(train_rows), data.subset(analysis_rows)
