"""Classical references: boxcar phase filter, amplitude ML coherence, and the
coherence to phase-deviation curve for single-look interferograms."""
from __future__ import annotations

import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from sklearn.base import BaseEstimator

from ._validation import check_plane, check_same_shape, check_window
from .raster import Interferogram, SlcImage, form_interferogram, reconstruct_phase

__all__ = [
    "window_sum",
    "boxcar_filter",
    "ml_coherence",
    "dilogarithm",
    "phase_std_from_coherence",
    "BoxcarFilter",
]


def window_sum(x: np.ndarray, window: int) -> np.ndarray:
    """Sum of ``x`` over a centred ``window x window`` box, clipped at the borders.

    Computed as two zero-padded 1-D sliding sums. Unlike a summed-area table
    this never subtracts large partial sums, so all-zero windows give exactly 0.
    """
    x = np.asarray(x, dtype=np.float64)
    half = window // 2
    pad = np.pad(x, half)
    rows = sliding_window_view(pad, window, axis=0).sum(-1)
    return sliding_window_view(rows, window, axis=1).sum(-1)


def ml_coherence(a1, a2, window: int) -> np.ndarray:
    """Windowed amplitude-only coherence ``|sum A1 A2| / sqrt(sum A1^2 sum A2^2)``.

    Windows whose denominator vanishes give 0. Output is float32 in [0, 1].
    """
    a1 = check_plane(a1, "a1")
    a2 = check_plane(a2, "a2")
    check_same_shape(a1, a2, ("a1", "a2"))
    window = check_window(window)
    num = np.abs(window_sum(a1 * a2, window))
    den = np.sqrt(window_sum(a1 * a1, window) * window_sum(a2 * a2, window))
    with np.errstate(invalid="ignore", divide="ignore"):
        coh = np.where(den > 0, num / den, 0.0)
    return np.clip(coh, 0.0, 1.0).astype(np.float32)


def boxcar_filter(ifg: Interferogram, window: int, a1=None, a2=None):
    """Moving average of amplitude-weighted phasors ``A_I * exp(i*dphi)``.

    Returns ``(phase, coherence)``. The coherence is the windowed
    :func:`ml_coherence` of the two SLC amplitudes ``a1``/``a2``; it is
    ``None`` when they are not supplied, since the interferogram amplitude
    alone does not determine it.
    """
    amp = check_plane(ifg.amplitude, "amplitude")
    window = check_window(window)
    phase = ifg.phase.astype(np.float64)
    re = window_sum(amp * np.cos(phase), window)
    im = window_sum(amp * np.sin(phase), window)
    filtered = reconstruct_phase(re, im).astype(np.float32)
    coherence = None
    if a1 is not None and a2 is not None:
        coherence = ml_coherence(a1, a2, window)
    return filtered, coherence


_LI2_TERMS = 80


def dilogarithm(x: float) -> float:
    """Real dilogarithm ``Li2(x) = sum_k x^k / k^2`` for ``0 <= x <= 1``.

    The series is summed directly for ``x <= 0.5`` and through the reflection
    ``Li2(x) = pi^2/6 - ln(x) ln(1-x) - Li2(1-x)`` above that, so at most
    ~``log(1e-17)/log(0.5)`` terms are ever needed.
    """
    x = float(x)
    if not 0.0 <= x <= 1.0 or math.isnan(x):
        raise ValueError(f"dilogarithm argument must be in [0, 1], got {x}")
    if x == 1.0:
        return math.pi**2 / 6
    if x > 0.5:
        return math.pi**2 / 6 - math.log(x) * math.log1p(-x) - dilogarithm(1.0 - x)
    total = 0.0
    term = 1.0
    for k in range(1, _LI2_TERMS + 1):
        term *= x
        total += term / (k * k)
        if term < 1e-18:
            break
    return total


def phase_std_from_coherence(coh: float) -> float:
    """Standard deviation of single-look interferometric phase at coherence ``coh``."""
    coh = float(coh)
    if not 0.0 <= coh <= 1.0 or math.isnan(coh):
        raise ValueError(f"coherence must be in [0, 1], got {coh}")
    # pi^2/3 - pi*asin(c) + asin(c)^2 = acos(c)^2 + pi^2/12, and
    # pi^2/12 - Li2(x)/2 = (Li2(1) - Li2(x))/2, taken through the reflection
    # formula near x = 1, so nothing cancels as coh -> 1
    x = coh * coh
    if x > 0.5:
        tail = math.log(x) * math.log1p(-x) + dilogarithm(1.0 - x) if x < 1.0 else 0.0
    else:
        tail = math.pi**2 / 6 - dilogarithm(x)
    return math.sqrt(math.acos(coh) ** 2 + tail / 2)


class BoxcarFilter(BaseEstimator):
    """Estimator wrapper around :func:`boxcar_filter`.

    ``X`` is a sequence of ``(SlcImage, SlcImage)`` pairs; ``predict``
    returns a list of ``(phase, coherence)`` tuples. There is nothing to learn,
    so ``fit`` only validates the window.
    """

    def __init__(self, window: int = 5):
        self.window = window

    def fit(self, X=None, y=None):
        check_window(self.window)
        self.is_fitted_ = True
        return self

    def predict(self, X):
        out = []
        for s1, s2 in X:
            out.append(self.filter_pair(s1, s2))
        return out

    def filter_pair(self, s1: SlcImage, s2: SlcImage):
        ifg = form_interferogram(s1, s2)
        return boxcar_filter(ifg, self.window, s1.amplitude, s2.amplitude)
