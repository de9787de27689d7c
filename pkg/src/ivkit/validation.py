"""Input validation helpers used across estimators and data containers."""

from __future__ import annotations

import numpy as np

from .errors import ValidationError


def as_vector(values, name: str) -> np.ndarray:
    """Coerce to a finite 1-d float array, raising ValidationError otherwise."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ValidationError(f"{name} must not be empty")
    if not np.all(np.isfinite(arr)):
        bad = int(np.flatnonzero(~np.isfinite(arr))[0])
        raise ValidationError(f"{name} has a non-finite entry at row {bad}")
    return arr


def as_matrix(values, name: str, allow_empty: bool = False) -> np.ndarray:
    """Coerce to a finite 2-d float array; a 1-d input becomes one column."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValidationError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if arr.shape[1] == 0 and not allow_empty:
        raise ValidationError(f"{name} must have at least one column")
    if not np.all(np.isfinite(arr)):
        row, col = (int(v[0]) for v in np.nonzero(~np.isfinite(arr)))
        raise ValidationError(f"{name} has a non-finite entry at row {row}, column {col}")
    return arr


def check_same_length(n: int, name_n: str, *pairs) -> None:
    """pairs: (array, name) tuples that must all have n rows."""
    for arr, name in pairs:
        if arr.shape[0] != n:
            raise ValidationError(
                f"{name} has {arr.shape[0]} rows but {name_n} has {n}"
            )


def check_binary(arr: np.ndarray, name: str) -> None:
    """Require every entry to be exactly 0.0 or 1.0."""
    bad = np.flatnonzero((arr != 0.0) & (arr != 1.0))
    if bad.size:
        row = int(bad[0])
        raise ValidationError(
            f"{name} must contain only 0/1 values; found {arr.flat[bad[0]]!r} at row {row}"
        )


def readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr
