"""Small input checks shared by the estimators and functional API."""
from __future__ import annotations

import numbers

import numpy as np

from .raster import Raster


def check_plane(values, name: str = "image", dtype=np.float64) -> np.ndarray:
    """Return ``values`` as a finite 2-D array."""
    arr = np.asarray(values.data if isinstance(values, Raster) else values)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} is empty")
    return np.asarray(arr, dtype=dtype)


def check_same_shape(a: np.ndarray, b: np.ndarray, names=("a", "b")) -> None:
    if np.shape(a) != np.shape(b):
        raise ValueError(f"shape mismatch: {names[0]} {np.shape(a)} vs {names[1]} {np.shape(b)}")


def check_window(window) -> int:
    """Validate an odd, positive window size.

    Windows larger than the image are allowed; they are clipped at the borders.
    """
    if not isinstance(window, numbers.Integral) or isinstance(window, bool):
        raise TypeError(f"window must be an integer, got {window!r}")
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be odd and >= 1, got {window}")
    return int(window)


def check_unit_interval(x, name: str = "value") -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0) or np.any(arr > 1):
        raise ValueError(f"{name} must lie in [0, 1]")
    return arr
