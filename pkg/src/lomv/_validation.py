"""Input validation helpers shared across the package."""

import math

import numpy as np


def as_1d_float_array(name: str, values) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


def require_all_finite(name: str, arr: np.ndarray) -> None:
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must contain only finite values")


def require_positive_scalar(name: str, value) -> float:
    x = float(value)
    if not math.isfinite(x) or x <= 0.0:
        raise ValueError(f"{name} must be a finite positive number, got {value!r}")
    return x


def require_index(name: str, value, size: int) -> int:
    i = int(value)
    if not 0 <= i < size:
        raise IndexError(f"{name}={value!r} out of range [0, {size})")
    return i
