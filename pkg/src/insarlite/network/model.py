"""Densely connected residual network with phase and coherence heads.

Topology::

    obs (4ch) -> stem conv -> [dense block x D] -> concat(all) -+-> real head -> residual_real
                                                                +-> imag head -> residual_imag
                                                                +-> coh head  -> coherence logits

Every dense block and head layer is a pre-activation unit,
``batchnorm -> ReLU -> conv3x3``. Block ``i`` reads the first ``stem + i*growth``
channels of a shared feature buffer and writes its ``growth`` channels right
after them, which gives dense connectivity without repeated concatenation.

Parameters live in a flat ``dict[str, ndarray]``. Keys ending in ``.mean`` or
``.var`` are batchnorm running statistics and get no gradient.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .layers import (
    batchnorm_backward,
    batchnorm_forward,
    conv3x3_backward,
    conv3x3_forward,
    relu,
    sigmoid,
    softplus,
)

__all__ = [
    "HEADS",
    "ModelSpec",
    "init_params",
    "zero_params",
    "param_shapes",
    "trainable_names",
    "forward",
    "apply_running_stats",
    "loss_and_grad",
    "backward",
    "StaleCacheError",
]

HEADS = ("real", "imag", "coh")


class StaleCacheError(RuntimeError):
    """``backward`` was handed a cache it cannot use."""


@dataclass(frozen=True)
class ModelSpec:
    in_channels: int = 4
    stem_channels: int = 16
    growth: int = 16
    dense_layers: int = 6
    head_width: int = 32
    head_depth: int = 3
    batchnorm: bool = True
    activation: bool = True

    @classmethod
    def micro(cls, linear: bool = False) -> "ModelSpec":
        """Tiny single-block model for gradient checks."""
        return cls(stem_channels=4, growth=4, dense_layers=1, head_width=4, head_depth=1,
                   batchnorm=not linear, activation=not linear)

    @property
    def feature_channels(self) -> int:
        return self.stem_channels + self.dense_layers * self.growth

    def block_in_channels(self, i: int) -> int:
        return self.stem_channels + i * self.growth

    def to_dict(self) -> dict:
        return asdict(self)

    def head_units(self):
        """``(name, in_ch, out_ch)`` for every unit of one head, output unit last."""
        widths = [self.feature_channels] + [self.head_width] * self.head_depth + [1]
        return [(str(j), widths[j], widths[j + 1]) for j in range(len(widths) - 1)]


def _unit_shapes(spec: ModelSpec, prefix: str, cin: int, cout: int, output: bool):
    shapes = {}
    if spec.batchnorm:
        for k in ("gamma", "beta", "mean", "var"):
            shapes[f"{prefix}.bn.{k}"] = (cin,)
    shapes[f"{prefix}.conv.w"] = (3, 3, cin, cout)
    # a bias feeding straight into batchnorm is cancelled by the mean subtraction
    if output or not spec.batchnorm:
        shapes[f"{prefix}.conv.b"] = (cout,)
    return shapes


def param_shapes(spec: ModelSpec) -> dict[str, tuple]:
    """Ordered map of every parameter name to its shape."""
    shapes = {"stem.conv.w": (3, 3, spec.in_channels, spec.stem_channels)}
    if not spec.batchnorm:
        shapes["stem.conv.b"] = (spec.stem_channels,)
    for i in range(spec.dense_layers):
        shapes.update(_unit_shapes(spec, f"dense{i}", spec.block_in_channels(i), spec.growth, False))
    for head in HEADS:
        units = spec.head_units()
        for j, (name, cin, cout) in enumerate(units):
            shapes.update(_unit_shapes(spec, f"{head}.{name}", cin, cout, j == len(units) - 1))
    return shapes


def trainable_names(params) -> list[str]:
    return [k for k in params if not (k.endswith(".bn.mean") or k.endswith(".bn.var"))]


def init_params(spec: ModelSpec, seed: int = 0, dtype=np.float32) -> dict[str, np.ndarray]:
    """He-normal conv kernels, zero biases, identity batchnorm."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 0x1417])))
    params = {}
    for name, shape in param_shapes(spec).items():
        if name.endswith(".conv.w"):
            fan_in = shape[0] * shape[1] * shape[2]
            value = rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)
        elif name.endswith((".bn.gamma", ".bn.var")):
            value = np.ones(shape)
        else:
            value = np.zeros(shape)
        params[name] = value.astype(dtype)
    return params


def zero_params(spec: ModelSpec, dtype=np.float32) -> dict[str, np.ndarray]:
    """All-zero weights (running variance kept at 1 so it stays positive)."""
    return {
        name: (np.ones(shape) if name.endswith(".bn.var") else np.zeros(shape)).astype(dtype)
        for name, shape in param_shapes(spec).items()
    }


def _unit_forward(params, spec, prefix, x, train, cache):
    h = x
    stats = None
    if spec.batchnorm:
        h, stats = batchnorm_forward(
            x, params[f"{prefix}.bn.gamma"], params[f"{prefix}.bn.beta"],
            params[f"{prefix}.bn.mean"], params[f"{prefix}.bn.var"], train,
        )
    if spec.activation:
        h = relu(h)
    out = conv3x3_forward(h, params[f"{prefix}.conv.w"], params.get(f"{prefix}.conv.b"))
    if cache is not None:
        cache["units"][prefix] = (x, stats, h)
    return out


def _unit_backward(params, spec, prefix, cache, dout, grads, need_dx=True):
    x, stats, h = cache["units"][prefix]
    dh, dw, db = conv3x3_backward(h, params[f"{prefix}.conv.w"], dout, need_dx)
    grads[f"{prefix}.conv.w"] = dw
    if f"{prefix}.conv.b" in params:
        grads[f"{prefix}.conv.b"] = db
    if not need_dx:
        return None
    if spec.activation:
        dh = dh * (h > 0)
    if spec.batchnorm:
        dh, dgamma, dbeta = batchnorm_backward(x, params[f"{prefix}.bn.gamma"], stats, dh)
        grads[f"{prefix}.bn.gamma"] = dgamma
        grads[f"{prefix}.bn.beta"] = dbeta
    return dh


def forward(params, spec: ModelSpec, obs, mode: str = "infer", ablate_block=None):
    """Run the network on ``obs`` of shape ``(N, H, W, 4)``.

    Returns ``(res_real, res_imag, coh_logits, cache)``, each output shaped
    ``(N, H, W, 1)``. ``cache`` is ``None`` in ``"infer"`` mode. In ``"train"``
    mode batchnorm uses batch statistics and the updated running statistics
    are stored in ``cache["running"]`` (apply them with
    :func:`apply_running_stats`); ``params`` is never modified.

    ``ablate_block`` zeroes the output of that dense block (diagnostic hook).
    """
    if mode not in ("train", "infer"):
        raise ValueError(f"mode must be 'train' or 'infer', got {mode!r}")
    obs = np.asarray(obs)
    if obs.ndim != 4 or obs.shape[-1] != spec.in_channels:
        raise ValueError(f"observation must be (N, H, W, {spec.in_channels}), got {obs.shape}")
    dtype = params["stem.conv.w"].dtype
    obs = np.ascontiguousarray(obs, dtype=dtype)
    train = mode == "train"
    cache = {"units": {}, "obs": obs, "spec": spec, "id": id(params)} if train else None

    n, h, w, _ = obs.shape
    feats = np.empty((n, h, w, spec.feature_channels), dtype=dtype)
    feats[..., : spec.stem_channels] = conv3x3_forward(obs, params["stem.conv.w"], params.get("stem.conv.b"))
    for i in range(spec.dense_layers):
        c0 = spec.block_in_channels(i)
        out = _unit_forward(params, spec, f"dense{i}", feats[..., :c0], train, cache)
        feats[..., c0 : c0 + spec.growth] = 0 if ablate_block == i else out

    outputs = []
    for head in HEADS:
        h_ = feats
        for name, _, _ in spec.head_units():
            h_ = _unit_forward(params, spec, f"{head}.{name}", h_, train, cache)
        outputs.append(h_)

    if train:
        cache["features"] = feats
        cache["running"] = {
            f"{prefix}.bn.{k}": stats[2 + j]
            for prefix, (_, stats, _) in cache["units"].items()
            if stats is not None
            for j, k in enumerate(("mean", "var"))
        }
    return outputs[0], outputs[1], outputs[2], cache


def apply_running_stats(params, cache) -> dict:
    """Return ``params`` with batchnorm running statistics from a train-mode forward."""
    updated = dict(params)
    updated.update(cache["running"])
    return updated


def loss_and_grad(outputs, targets):
    """Residual L2 losses plus sigmoid cross-entropy on the coherence logits.

    ``targets`` is ``(residual_real, residual_imag, coherence)``. Returns
    ``(total, parts, grads)`` with ``parts = {"phase": .., "coh": ..}`` and
    ``grads`` the gradient of ``total`` with respect to each output.
    """
    rr, ri, c = outputs
    tr, ti, z = (np.asarray(t, dtype=rr.dtype).reshape(rr.shape) for t in targets)
    n = rr.size
    er = rr - tr
    ei = ri - ti
    phase = 0.5 * (np.sum(er * er, dtype=np.float64) + np.sum(ei * ei, dtype=np.float64)) / n
    coh = np.sum(z * softplus(-c) + (1 - z) * softplus(c), dtype=np.float64) / n
    grads = (er / n, ei / n, (sigmoid(c) - z) / n)
    return phase + coh, {"phase": phase, "coh": coh}, tuple(g.astype(rr.dtype) for g in grads)


def backward(params, cache, output_grads) -> dict[str, np.ndarray]:
    """Gradients of the loss for every trainable parameter.

    ``cache`` must come from a train-mode :func:`forward` with the same
    ``params`` object.
    """
    if not cache or "units" not in cache or "features" not in cache:
        raise StaleCacheError("backward needs the cache of a train-mode forward pass")
    if cache.get("id") != id(params):
        raise StaleCacheError("cache was produced with a different parameter set")
    spec = cache["spec"]
    grads = {}
    feats = cache["features"]
    dfeats = np.zeros_like(feats)
    for head, dout in zip(HEADS, output_grads):
        d = np.asarray(dout, dtype=feats.dtype).reshape(feats.shape[:3] + (1,))
        for name, _, _ in reversed(spec.head_units()):
            d = _unit_backward(params, spec, f"{head}.{name}", cache, d, grads)
        dfeats += d
    for i in reversed(range(spec.dense_layers)):
        c0 = spec.block_in_channels(i)
        dx = _unit_backward(params, spec, f"dense{i}", cache, dfeats[..., c0 : c0 + spec.growth], grads)
        dfeats[..., :c0] += dx
    _, dw, db = conv3x3_backward(cache["obs"], params["stem.conv.w"], dfeats[..., : spec.stem_channels], False)
    grads["stem.conv.w"] = dw
    if "stem.conv.b" in params:
        grads["stem.conv.b"] = db
    return {k: grads[k] for k in trainable_names(params)}
