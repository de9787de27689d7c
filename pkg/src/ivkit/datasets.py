"""Data containers and CSV ingestion.

Two containers cover everything downstream:

* :class:`Dataset` holds a rectangular sample with column roles (one outcome,
  one treatment, one or more instruments, optional exogenous covariates).
* :class:`BinaryIVTable` holds the 2x2x2 count table of a binary outcome,
  binary treatment and binary instrument, which is all the
  compliance/bounds machinery needs.

Both are immutable after construction and safe to share across threads.
The bundled influenza-vaccination encouragement data ships as a count table
via :func:`flu_table`.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import ValidationError
from .validation import as_matrix, as_vector, check_binary, check_same_length, readonly

__all__ = [
    "ColumnRoles",
    "Dataset",
    "BinaryIVTable",
    "load_csv",
    "write_csv",
    "flu_table",
    "table_from_dataset",
    "expand_table",
]


@dataclass(frozen=True)
class ColumnRoles:
    """Maps CSV column names to analysis roles.

    ``recode`` optionally maps raw cell strings (for example ``"yes"``) to
    numeric values before parsing; cells not in the map are parsed as
    decimal numbers.
    """

    outcome: str
    treatment: str
    instruments: tuple[str, ...]
    covariates: tuple[str, ...] = ()
    recode: Mapping[str, float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "instruments", tuple(self.instruments))
        object.__setattr__(self, "covariates", tuple(self.covariates))
        if not self.instruments:
            raise ValidationError("at least one instrument column is required")
        names = [self.outcome, self.treatment, *self.instruments, *self.covariates]
        dupes = {n for n in names if names.count(n) > 1}
        if dupes:
            raise ValidationError(f"column(s) {sorted(dupes)} assigned to more than one role")

    @property
    def all_columns(self) -> tuple[str, ...]:
        return (self.outcome, self.treatment, *self.instruments, *self.covariates)


@dataclass(frozen=True)
class Dataset:
    """A validated sample of (outcome, treatment, instruments, covariates).

    Construction rejects non-finite entries, length mismatches and constant
    instrument columns, so downstream estimators can assume a well-formed
    sample.  Arrays are stored read-only.
    """

    outcome: np.ndarray
    treatment: np.ndarray
    instruments: np.ndarray
    covariates: np.ndarray = field(default=None)  # type: ignore[assignment]
    outcome_name: str = "y"
    treatment_name: str = "x"
    instrument_names: tuple[str, ...] = ()
    covariate_names: tuple[str, ...] = ()

    def __post_init__(self):
        y = as_vector(self.outcome, "outcome")
        x = as_vector(self.treatment, "treatment")
        z = as_matrix(self.instruments, "instruments")
        if self.covariates is None:
            v = np.empty((y.shape[0], 0))
        else:
            v = as_matrix(self.covariates, "covariates", allow_empty=True)
        check_same_length(y.shape[0], "outcome", (x, "treatment"), (z, "instruments"), (v, "covariates"))

        z_names = self.instrument_names or tuple(f"z{k + 1}" for k in range(z.shape[1]))
        v_names = self.covariate_names or tuple(f"v{k + 1}" for k in range(v.shape[1]))
        if len(z_names) != z.shape[1]:
            raise ValidationError("instrument_names length does not match instrument count")
        if len(v_names) != v.shape[1]:
            raise ValidationError("covariate_names length does not match covariate count")

        for k, name in enumerate(z_names):
            col = z[:, k]
            if col.max() == col.min():
                raise ValidationError(f"instrument column {name!r} is constant")

        object.__setattr__(self, "outcome", readonly(y))
        object.__setattr__(self, "treatment", readonly(x))
        object.__setattr__(self, "instruments", readonly(z))
        object.__setattr__(self, "covariates", readonly(v))
        object.__setattr__(self, "instrument_names", tuple(z_names))
        object.__setattr__(self, "covariate_names", tuple(v_names))

    @property
    def n(self) -> int:
        return self.outcome.shape[0]

    @property
    def n_instruments(self) -> int:
        return self.instruments.shape[1]

    @property
    def n_covariates(self) -> int:
        return self.covariates.shape[1]

    @property
    def column_names(self) -> tuple[str, ...]:
        return (
            self.outcome_name,
            self.treatment_name,
            *self.instrument_names,
            *self.covariate_names,
        )


def load_csv(path, roles: ColumnRoles) -> Dataset:
    """Read a comma-separated file into a validated :class:`Dataset`.

    The file must have a header row naming every role column, use a decimal
    point and be UTF-8 encoded.  Any missing or unparseable cell in a role
    column fails the whole file; rows are never silently dropped.

    Parameters
    ----------
    path : str or Path
        File to read.
    roles : ColumnRoles
        Assignment of header names to analysis roles.

    Raises
    ------
    ValidationError
        Missing file, missing role column, unparseable cell (reported with
        its row and column), zero data rows, or a constant instrument.
    """
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"file not found: {path}")

    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        missing = [c for c in roles.all_columns if c not in header]
        if missing:
            raise ValidationError(f"{path}: missing column(s) {missing}; header is {header}")
        index = {c: header.index(c) for c in roles.all_columns}

        rows: list[list[float]] = []
        for row_number, row in enumerate(reader, start=1):
            if not row or all(cell.strip() == "" for cell in row):
                continue
            parsed = []
            for col in roles.all_columns:
                pos = index[col]
                cell = row[pos].strip() if pos < len(row) else ""
                if roles.recode and cell in roles.recode:
                    parsed.append(float(roles.recode[cell]))
                    continue
                try:
                    value = float(cell)
                except ValueError:
                    raise ValidationError(
                        f"{path}: cannot parse cell {cell!r} at data row {row_number}, "
                        f"column {col!r}"
                    ) from None
                if not np.isfinite(value):
                    raise ValidationError(
                        f"{path}: non-finite value at data row {row_number}, column {col!r}"
                    )
                parsed.append(value)
            rows.append(parsed)

    if not rows:
        raise ValidationError(f"{path}: no data rows")

    data = np.asarray(rows, dtype=float)
    k = len(roles.instruments)
    m = len(roles.covariates)
    return Dataset(
        outcome=data[:, 0],
        treatment=data[:, 1],
        instruments=data[:, 2 : 2 + k],
        covariates=data[:, 2 + k : 2 + k + m],
        outcome_name=roles.outcome,
        treatment_name=roles.treatment,
        instrument_names=roles.instruments,
        covariate_names=roles.covariates,
    )


def write_csv(dataset: Dataset, path) -> None:
    """Write a dataset back to CSV with its role columns and header row."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(dataset.column_names)
        blocks = [
            dataset.outcome[:, None],
            dataset.treatment[:, None],
            dataset.instruments,
            dataset.covariates,
        ]
        full = np.hstack(blocks)
        for row in full:
            writer.writerow([repr(float(v)) for v in row])


@dataclass(frozen=True)
class BinaryIVTable:
    """Counts N[y][x][z] for binary outcome, treatment and instrument.

    ``counts`` is a (2, 2, 2) integer array indexed by (y, x, z).  Both
    instrument arms must be non-empty.
    """

    counts: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.counts)
        if arr.shape != (2, 2, 2):
            raise ValidationError(f"counts must have shape (2, 2, 2), got {arr.shape}")
        if not np.issubdtype(arr.dtype, np.integer):
            as_int = arr.astype(np.int64)
            if not np.array_equal(as_int, arr):
                raise ValidationError("counts must be integers")
            arr = as_int
        if (arr < 0).any():
            raise ValidationError("counts must be nonnegative")
        if arr.sum() < 1:
            raise ValidationError("total count must be at least 1")
        if arr[:, :, 0].sum() < 1 or arr[:, :, 1].sum() < 1:
            raise ValidationError("both instrument arms must be non-empty")
        object.__setattr__(self, "counts", readonly(arr.astype(np.int64)))

    @classmethod
    def from_cells(cls, cells: Mapping[tuple[int, int, int], int]) -> "BinaryIVTable":
        arr = np.zeros((2, 2, 2), dtype=np.int64)
        for (y, x, z), count in cells.items():
            arr[y, x, z] = count
        return cls(arr)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def n_z0(self) -> int:
        return int(self.counts[:, :, 0].sum())

    @property
    def n_z1(self) -> int:
        return int(self.counts[:, :, 1].sum())

    def arm_size(self, z: int) -> int:
        return int(self.counts[:, :, z].sum())

    def count(self, y: int, x: int, z: int) -> int:
        return int(self.counts[y, x, z])

    def p_joint(self, y: int, x: int, z: int) -> float:
        """P(Y=y, X=x | Z=z), the within-arm cell frequency."""
        return float(self.counts[y, x, z]) / self.arm_size(z)

    def p_outcome(self, z: int) -> float:
        """P(Y=1 | Z=z)."""
        return float(self.counts[1, :, z].sum()) / self.arm_size(z)

    def p_treatment(self, z: int) -> float:
        """P(X=1 | Z=z)."""
        return float(self.counts[:, 1, z].sum()) / self.arm_size(z)

    def cell_size(self, x: int, z: int) -> int:
        return int(self.counts[:, x, z].sum())

    def p_outcome_in_cell(self, x: int, z: int) -> float:
        """P(Y=1 | X=x, Z=z); raises on an empty conditioning cell."""
        size = self.cell_size(x, z)
        if size == 0:
            raise ValidationError(f"conditioning cell (X={x}, Z={z}) is empty")
        return float(self.counts[1, x, z]) / size


# Influenza-vaccination encouragement study (McDonald, Hiu and Tierney 1992):
# Y = flu-related hospitalization, X = vaccination, Z = physician reminder letter.
_FLU_CELLS = {
    (0, 0, 0): 1027,
    (0, 0, 1): 935,
    (0, 1, 0): 233,
    (0, 1, 1): 422,
    (1, 0, 0): 99,
    (1, 0, 1): 84,
    (1, 1, 0): 30,
    (1, 1, 1): 31,
}


def flu_table() -> BinaryIVTable:
    """The bundled influenza encouragement-design count table (N = 2861)."""
    return BinaryIVTable.from_cells(_FLU_CELLS)


def table_from_dataset(dataset: Dataset) -> BinaryIVTable:
    """Cross-tabulate a binary (outcome, treatment, instrument) dataset.

    Requires exactly one instrument column, no covariates, and literal 0/1
    values in all three role columns.
    """
    if dataset.n_instruments != 1:
        raise ValidationError(
            f"a binary count table needs exactly one instrument, got {dataset.n_instruments}"
        )
    if dataset.n_covariates != 0:
        raise ValidationError("covariates cannot be represented in a binary count table")
    y = dataset.outcome
    x = dataset.treatment
    z = dataset.instruments[:, 0]
    check_binary(y, "outcome")
    check_binary(x, "treatment")
    check_binary(z, "instrument")
    counts = np.zeros((2, 2, 2), dtype=np.int64)
    np.add.at(counts, (y.astype(np.int64), x.astype(np.int64), z.astype(np.int64)), 1)
    return BinaryIVTable(counts)


def expand_table(table: BinaryIVTable, names: Sequence[str] = ("y", "x", "z")) -> Dataset:
    """Expand a count table to one row per observation.

    Rows are emitted in fixed (y, x, z) cell order, so expansion is
    deterministic and ``table_from_dataset(expand_table(t)) == t``.
    """
    rows = []
    for y in (0, 1):
        for x in (0, 1):
            for z in (0, 1):
                rows.extend([(float(y), float(x), float(z))] * table.count(y, x, z))
    data = np.asarray(rows, dtype=float)
    return Dataset(
        outcome=data[:, 0],
        treatment=data[:, 1],
        instruments=data[:, 2:3],
        outcome_name=names[0],
        treatment_name=names[1],
        instrument_names=(names[2],),
    )
