"""Forward/backward kernels for NHWC tensors: 3x3 convolution, batchnorm, ReLU.

The convolution avoids a full im2col. The input is multiplied once by all
nine taps stacked side by side, ``(P, Cin) @ (Cin, 9*Cout)``, and the nine
``Cout``-wide results are shift-added. The backward pass mirrors this, so
only ``9*Cout`` channels ever get materialised per pixel. Output widths are
small (1 to 32), which makes that cheap.
"""
from __future__ import annotations

import numpy as np

BN_EPS = 1e-5
BN_MOMENTUM = 0.9

_OFFSETS = [(di, dj) for di in (-1, 0, 1) for dj in (-1, 0, 1)]


def _span(d: int, n: int):
    """(destination, source) slices for a shift by ``d`` along an axis of length ``n``."""
    return slice(max(0, -d), n - max(0, d)), slice(max(0, d), n - max(0, -d))


def conv3x3_forward(x: np.ndarray, w: np.ndarray, b=None) -> np.ndarray:
    """Stride-1, zero-padded 3x3 cross-correlation. ``w`` has shape ``(3, 3, Cin, Cout)``."""
    n, h, wd, cin = x.shape
    cout = w.shape[3]
    wall = w.transpose(2, 0, 1, 3).reshape(cin, 9 * cout)
    taps = (x.reshape(-1, cin) @ wall).reshape(n, h, wd, 9, cout)
    out = np.array(taps[:, :, :, 4, :])  # centre tap covers every pixel
    for k, (di, dj) in enumerate(_OFFSETS):
        if k == 4:
            continue
        rd, rs = _span(di, h)
        cd, cs = _span(dj, wd)
        out[:, rd, cd, :] += taps[:, rs, cs, k, :]
    if b is not None:
        out += b
    return out


def conv3x3_backward(x: np.ndarray, w: np.ndarray, dout: np.ndarray, need_dx: bool = True):
    """Return ``(dx, dw, db)``; ``dx`` is ``None`` when ``need_dx`` is false."""
    n, h, wd, cin = x.shape
    cout = w.shape[3]
    dtaps = np.zeros((n, h, wd, 9, cout), dtype=dout.dtype)
    for k, (di, dj) in enumerate(_OFFSETS):
        rd, rs = _span(di, h)
        cd, cs = _span(dj, wd)
        dtaps[:, rs, cs, k, :] = dout[:, rd, cd, :]
    dtaps = dtaps.reshape(-1, 9 * cout)
    dwall = x.reshape(-1, cin).T @ dtaps
    dw = dwall.reshape(cin, 3, 3, cout).transpose(1, 2, 0, 3)
    db = dout.reshape(-1, cout).sum(0, dtype=np.float64).astype(dout.dtype)
    dx = None
    if need_dx:
        wall = w.transpose(2, 0, 1, 3).reshape(cin, 9 * cout)
        dx = (dtaps @ wall.T).reshape(n, h, wd, cin)
    return dx, np.ascontiguousarray(dw), db


def _colsum(a2d):
    # BLAS reduction over rows; float32 inputs accumulate in float32
    return np.ones(a2d.shape[0], a2d.dtype) @ a2d


def batchnorm_forward(x, gamma, beta, running_mean, running_var, train: bool):
    """Per-channel batch normalisation over ``(N, H, W)``.

    Returns ``(y, stats)`` where ``stats`` is ``(mean, invstd, new_running_mean,
    new_running_var)`` in train mode and ``None`` in inference mode.
    """
    c = x.shape[-1]
    if not train:
        invstd = 1.0 / np.sqrt(running_var.astype(np.float64) + BN_EPS)
        scale = (gamma * invstd).astype(x.dtype)
        shift = (beta - running_mean * scale).astype(x.dtype)
        y = x * scale
        y += shift
        return y, None
    flat = x.reshape(-1, c)
    m = flat.shape[0]
    mean = (_colsum(flat) / m).astype(x.dtype)
    y = x - mean
    centred = y.reshape(-1, c)
    var = _colsum(centred * centred).astype(np.float64) / m
    invstd = 1.0 / np.sqrt(var + BN_EPS)
    y *= (gamma * invstd).astype(x.dtype)
    y += beta
    new_mean = BN_MOMENTUM * running_mean + (1 - BN_MOMENTUM) * mean
    new_var = BN_MOMENTUM * running_var + (1 - BN_MOMENTUM) * var
    stats = (mean, invstd.astype(x.dtype),
             new_mean.astype(running_mean.dtype), new_var.astype(running_var.dtype))
    return y, stats


def batchnorm_backward(x, gamma, stats, dy):
    """Gradients ``(dx, dgamma, dbeta)`` for a train-mode batchnorm."""
    mean, invstd = stats[0], stats[1]
    c = x.shape[-1]
    m = x.size // c
    centred = x - mean
    dyf = dy.reshape(-1, c)
    dbeta = _colsum(dyf)
    dgamma = np.einsum("pc,pc->c", centred.reshape(-1, c), dyf) * invstd
    k = gamma * invstd
    # dx = k * (dy - mean(dy) - xhat * mean(dy * xhat))
    centred *= k * invstd * dgamma / m
    dx = dy * k
    dx -= centred
    dx -= k * dbeta / m
    return dx, dgamma.astype(gamma.dtype), dbeta.astype(gamma.dtype)


def relu(x):
    return np.maximum(x, 0, dtype=x.dtype)


def sigmoid(x):
    x = np.asarray(x)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def softplus(x):
    """``log(1 + exp(x))`` without overflow."""
    return np.logaddexp(0, x)
