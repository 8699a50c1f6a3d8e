"""Central finite-difference check of the analytic gradients (float64)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ModelSpec, backward, forward, init_params, loss_and_grad, trainable_names


@dataclass(frozen=True)
class GradCheckReport:
    max_rel_error: float
    checked: int
    redrawn: int
    worst: tuple  # (parameter name, flat index)

    def passed(self, tol: float = 1e-5) -> bool:
        return self.max_rel_error < tol


def _problem(spec: ModelSpec, seed: int, batch: int, size: int):
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 0x6C4])))
    params = init_params(spec, seed, dtype=np.float64)
    for name in params:
        # move away from the identity init so every term is exercised
        if name.endswith(".bn.gamma"):
            params[name] = rng.uniform(0.5, 1.5, params[name].shape)
        elif name.endswith((".bn.beta", ".conv.b")):
            params[name] = rng.normal(0, 0.1, params[name].shape)
    theta = rng.uniform(-np.pi, np.pi, (batch, size, size))
    obs = np.stack([np.cos(theta), np.sin(theta),
                    rng.uniform(0, 1, theta.shape), rng.uniform(0, 1, theta.shape)], axis=-1)
    targets = (rng.normal(0, 0.5, theta.shape + (1,)), rng.normal(0, 0.5, theta.shape + (1,)),
               rng.uniform(0, 1, theta.shape + (1,)))
    return rng, params, obs, targets


def _evaluate(params, spec, obs, targets):
    rr, ri, c, cache = forward(params, spec, obs, "train")
    loss, _, grads = loss_and_grad((rr, ri, c), targets)
    masks = None
    if spec.activation:
        masks = np.concatenate([(h > 0).ravel() for _, _, h in cache["units"].values()])
    return loss, masks, cache, grads


def grad_check(spec: ModelSpec | None = None, seed: int = 0, samples: int = 200,
               h: float = 1e-4, batch: int = 2, size: int = 8, prefixes=None) -> GradCheckReport:
    """Compare analytic and central-difference gradients on ``samples`` random parameters.

    Parameters whose perturbation flips any ReLU gate are skipped and another
    one is drawn, since the loss is not differentiable across the kink.
    ``prefixes`` restricts sampling to parameter names with those prefixes.
    """
    spec = spec or ModelSpec.micro()
    rng, params, obs, targets = _problem(spec, seed, batch, size)
    _, base_masks, cache, out_grads = _evaluate(params, spec, obs, targets)
    analytic = backward(params, cache, out_grads)

    names = [n for n in trainable_names(params) if prefixes is None or n.startswith(tuple(prefixes))]
    candidates = [(name, i) for name in names for i in range(params[name].size)]
    order = rng.permutation(len(candidates))
    worst, worst_at, checked, redrawn = 0.0, None, 0, 0
    for k in order:
        if checked >= samples:
            break
        name, i = candidates[k]
        losses = []
        flipped = False
        for sign in (1, -1):
            p = dict(params)
            p[name] = params[name].copy()
            p[name].flat[i] += sign * h
            loss, masks, _, _ = _evaluate(p, spec, obs, targets)
            if base_masks is not None and not np.array_equal(masks, base_masks):
                flipped = True
                break
            losses.append(loss)
        if flipped:
            redrawn += 1
            continue
        fd = (losses[0] - losses[1]) / (2 * h)
        a = float(analytic[name].flat[i])
        rel = abs(a - fd) / max(abs(a), abs(fd), 1e-8)
        checked += 1
        if rel > worst or worst_at is None:
            worst, worst_at = max(rel, worst), (name, int(i))
    return GradCheckReport(worst, checked, redrawn, worst_at)
