"""Input validation helpers for the estimator-facing API."""

from __future__ import annotations

import numpy as np


def check_profile_stack(X, min_scans: int = 2) -> np.ndarray:
    """Coerce X to a (n_scans, n_range) float stack of range profiles.

    Accepts a 2-D scans x range array or a 3-D scans x azimuth x range
    stack of heat maps (azimuth-averaged here). Values must be finite.
    """
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 3:
        arr = arr.mean(axis=1)
    if arr.ndim != 2:
        raise ValueError(
            f"expected scans x range (or scans x azimuth x range), got shape {arr.shape}"
        )
    if arr.shape[0] < min_scans:
        raise ValueError(f"need at least {min_scans} scans, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("profile stack contains non-finite values")
    return arr


def check_positive(value, name: str):
    if value is None or not value > 0:
        raise ValueError(f"{name} must be positive, got {value!r}")
    return value


def check_in_range(value, low, high, name: str):
    if not low <= value <= high:
        raise ValueError(f"{name} must lie in [{low}, {high}], got {value!r}")
    return value
