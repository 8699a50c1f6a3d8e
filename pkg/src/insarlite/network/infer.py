"""Tiled inference: residual phasor correction and sigmoid coherence."""
from __future__ import annotations

import numpy as np

from ..preprocessing import observation_from_pair
from ..raster import PI_F32, SlcImage, reconstruct_phase, wrap_phase
from .layers import sigmoid
from .model import ModelSpec, forward

TILE = 128
OVERLAP = 16
FRAME = 8


def tile_starts(n: int, tile: int = TILE, overlap: int = OVERLAP) -> list[int]:
    """Tile origins along one axis; the last tile is flush with the far edge."""
    if n <= tile:
        return [0]
    step = tile - overlap
    starts = list(range(0, n - tile, step))
    starts.append(n - tile)
    return starts


def _keep(start: int, length: int, n: int, frame: int):
    lo = start + (frame if start > 0 else 0)
    hi = start + length - (frame if start + length < n else 0)
    return lo, hi


def predict_raw(params, spec: ModelSpec, obs: np.ndarray, tile: int = TILE, overlap: int = OVERLAP,
                frame: int = FRAME) -> np.ndarray:
    """Network outputs ``(H, W, 3)`` = ``[res_real, res_imag, logit]`` for one observation.

    The image is split into ``tile``-sized tiles overlapping by ``overlap``;
    each interior tile edge drops ``frame`` pixels when stitched. ``tile=None``
    runs the whole image in one pass.
    """
    obs = np.asarray(obs, np.float32)
    h, w = obs.shape[:2]
    if tile is None:
        rr, ri, c, _ = forward(params, spec, obs[None], "infer")
        return np.concatenate([rr[0], ri[0], c[0]], axis=-1)
    out = np.empty((h, w, 3), np.float32)
    for r in tile_starts(h, tile, overlap):
        th = min(tile, h)
        r_lo, r_hi = _keep(r, th, h, frame)
        for c0 in tile_starts(w, tile, overlap):
            tw = min(tile, w)
            c_lo, c_hi = _keep(c0, tw, w, frame)
            rr, ri, c, _ = forward(params, spec, obs[None, r : r + th, c0 : c0 + tw], "infer")
            block = np.concatenate([rr[0], ri[0], c[0]], axis=-1)
            out[r_lo:r_hi, c_lo:c_hi] = block[r_lo - r : r_hi - r, c_lo - c0 : c_hi - c0]
    return out


def compose_outputs(obs: np.ndarray, raw: np.ndarray, phase=None):
    """Clean phase ``angle(x)`` with ``x = y - R`` and coherence ``sigmoid(logit)``.

    Given the interferogram ``phase`` the angle is built as
    ``phase + angle(x * conj(y))``: the same value, but bit-identical to
    ``phase`` wherever ``R = 0``. Without it the result is
    ``reconstruct_phase(x_real, x_imag)``.
    """
    xr = obs[..., 0] - raw[..., 0]
    xi = obs[..., 1] - raw[..., 1]
    coherence = sigmoid(raw[..., 2])
    if phase is None:
        return reconstruct_phase(xr, xi), coherence
    yr = obs[..., 0].astype(np.float64)
    yi = obs[..., 1].astype(np.float64)
    xr64, xi64 = xr.astype(np.float64), xi.astype(np.float64)
    delta = np.arctan2(xi64 * yr - xr64 * yi, xr64 * yr + xi64 * yi)
    out = (np.asarray(phase, np.float64) + delta).astype(np.float32)
    outside = (out >= PI_F32) | (out < -PI_F32)
    out[outside] = wrap_phase(out[outside])
    out[(xr == 0) & (xi == 0)] = 0
    return out, coherence


def infer(params, spec: ModelSpec, s1: SlcImage, s2: SlcImage, tile: int | None = TILE):
    """Filtered phase and coherence for one SLC pair, both float32 ``(H, W)``."""
    obs, ifg = observation_from_pair(s1, s2)
    raw = predict_raw(params, spec, obs.data, tile=tile)
    return compose_outputs(obs.data, raw, ifg.phase)
