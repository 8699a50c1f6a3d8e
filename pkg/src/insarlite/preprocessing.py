"""Robust amplitude normalisation and the 4-channel network observation.

Amplitudes are mapped through a modified Z-score (median/MAD) and a scaled
tanh, ``0.5 * (tanh(z / 7) + 1)``, so heavy right tails saturate towards 1
instead of being cut off. Statistics are computed per image.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_plane, check_same_shape
from .raster import Interferogram, Raster, SlcImage, form_interferogram, phase_to_complex

__all__ = [
    "MZ_SCALE",
    "MEAN_AD_SCALE",
    "TANH_DIVISOR",
    "ObservationStack",
    "lower_median",
    "mad",
    "modified_zscore",
    "normalize_amplitude",
    "assemble_observation",
    "observation_from_pair",
    "AmplitudeNormalizer",
]

MZ_SCALE = 0.6745
# MAD == 0 fallback: mean absolute deviation rescaled to a normal-consistent spread
MEAN_AD_SCALE = 1.2533
TANH_DIVISOR = 7.0

_OPEN_LO = np.finfo(np.float32).tiny
_OPEN_HI = np.nextafter(np.float32(1), np.float32(0))


def lower_median(values) -> float:
    """Median taking the lower middle element for even counts."""
    flat = np.asarray(values, dtype=np.float64).ravel()
    if flat.size == 0:
        raise ValueError("median of an empty array")
    k = (flat.size - 1) // 2
    return float(np.partition(flat, k)[k])


def mad(values) -> tuple[float, float]:
    """Return ``(median, median absolute deviation)``, both lower medians."""
    flat = np.asarray(values.data if isinstance(values, Raster) else values, dtype=np.float64).ravel()
    if flat.size == 0:
        raise ValueError("MAD of an empty array")
    if not np.all(np.isfinite(flat)):
        raise ValueError("MAD requires finite values")
    med = lower_median(flat)
    return med, lower_median(np.abs(flat - med))


def _robust_scale(flat: np.ndarray, med: float, mad_value: float) -> float:
    if mad_value > 0:
        return mad_value
    return MEAN_AD_SCALE * float(np.mean(np.abs(flat - med)))


def modified_zscore(values, median=None, scale=None) -> np.ndarray:
    """``0.6745 * (A - median) / MAD`` with a mean-absolute-deviation fallback.

    If both MAD and the mean absolute deviation are zero the result is all
    zeros. ``median``/``scale`` may be passed to reuse fitted statistics.
    """
    arr = np.asarray(values, dtype=np.float64)
    if median is None or scale is None:
        med, m = mad(arr)
        scale = _robust_scale(arr.ravel(), med, m)
        median = med
    if scale == 0:
        return np.zeros(arr.shape)
    return MZ_SCALE * (arr - median) / scale


def _squash(mz) -> np.ndarray:
    out = 0.5 * (np.tanh(np.asarray(mz, dtype=np.float64) / TANH_DIVISOR) + 1.0)
    return np.clip(out.astype(np.float32), _OPEN_LO, _OPEN_HI)


def normalize_amplitude(values) -> np.ndarray:
    """Map amplitudes into the open interval (0, 1); the median lands on 0.5."""
    return _squash(modified_zscore(values))


@dataclass(frozen=True, eq=False)
class ObservationStack:
    """``(H, W, 4)`` float32 array ordered ``[y_real, y_imag, a1_norm, a2_norm]``."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr.ndim != 3 or arr.shape[2] != 4:
            raise ValueError(f"observation must be (H, W, 4), got {arr.shape}")
        object.__setattr__(self, "data", arr)

    @property
    def shape(self):
        return self.data.shape[:2]


def assemble_observation(ifg: Interferogram, norm_a1, norm_a2) -> ObservationStack:
    a1 = check_plane(norm_a1, "norm_a1", np.float32)
    a2 = check_plane(norm_a2, "norm_a2", np.float32)
    check_same_shape(ifg.phase, a1, ("interferogram", "norm_a1"))
    check_same_shape(ifg.phase, a2, ("interferogram", "norm_a2"))
    re, im = phase_to_complex(ifg.phase)
    return ObservationStack(np.stack([re, im, a1, a2], axis=-1))


def observation_from_pair(s1: SlcImage, s2: SlcImage) -> tuple[ObservationStack, Interferogram]:
    """Interferogram plus per-image normalised amplitudes, ready for the network."""
    ifg = form_interferogram(s1, s2)
    obs = assemble_observation(ifg, normalize_amplitude(s1.amplitude), normalize_amplitude(s2.amplitude))
    return obs, ifg


class AmplitudeNormalizer(TransformerMixin, BaseEstimator):
    """Median/MAD + tanh amplitude normaliser.

    ``fit`` learns the median and robust scale of one amplitude image;
    ``transform`` applies them. Use ``fit_transform`` for the usual
    per-image normalisation.
    """

    def fit(self, X, y=None):
        arr = check_plane(X, "X")
        med, m = mad(arr)
        self.median_ = med
        self.mad_ = m
        self.scale_ = _robust_scale(arr.ravel(), med, m)
        return self

    def transform(self, X):
        check_is_fitted(self, "scale_")
        arr = check_plane(X, "X")
        return _squash(modified_zscore(arr, self.median_, self.scale_))
