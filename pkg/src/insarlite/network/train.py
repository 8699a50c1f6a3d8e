"""Patch-sampling training loop."""
from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..preprocessing import assemble_observation, normalize_amplitude
from ..raster import Interferogram, phase_to_complex, read_raster
from ..simulator import load_manifest
from .model import ModelSpec, apply_running_stats, backward, forward, init_params, loss_and_grad
from .optim import AdamState, adam_step


@dataclass(frozen=True)
class TrainConfig:
    iters: int = 2000
    batch: int = 16
    patch: int = 64
    lr: float = 1e-3
    seed: int = 0
    log_every: int = 100


def training_pair(noisy_a1, noisy_a2, noisy_phase, truth_phase, truth_coh):
    """Observation ``(H, W, 4)`` and target ``(H, W, 3)`` for one image.

    Targets are ``[y_real - x_real, y_imag - x_imag, z]`` with ``y`` the noisy
    phasor, ``x`` the clean phasor and ``z`` the reference coherence.
    """
    ifg = Interferogram(np.asarray(noisy_a1) * np.asarray(noisy_a2), noisy_phase)
    obs = assemble_observation(ifg, normalize_amplitude(noisy_a1), normalize_amplitude(noisy_a2)).data
    xr, xi = phase_to_complex(truth_phase)
    target = np.stack([obs[..., 0] - xr, obs[..., 1] - xi, np.asarray(truth_coh, np.float32)], axis=-1)
    return obs, target.astype(np.float32)


def load_training_set(manifest) -> list[tuple[np.ndarray, np.ndarray]]:
    """Read every manifest sample into memory as ``(obs, target)`` pairs."""
    entries, base = load_manifest(manifest)
    if not entries:
        raise ValueError(f"{manifest}: manifest has no samples")
    data = []
    for e in entries:
        planes = {}
        for key in ("noisy_a1", "noisy_a2", "noisy_phase", "truth_phase", "truth_coh"):
            path = Path(base) / e["paths"][key]
            try:
                planes[key] = read_raster(path).plane()
            except (OSError, ValueError) as exc:
                raise ValueError(f"cannot read {path}: {exc}") from exc
        data.append(training_pair(**planes))
    return data


def sample_batch(data, batch: int, patch: int, rng: np.random.Generator):
    """Random ``patch x patch`` crops: returns ``(obs, targets)`` NHWC arrays."""
    obs = np.empty((batch, patch, patch, 4), np.float32)
    tgt = np.empty((batch, patch, patch, 3), np.float32)
    for b in range(batch):
        o, t = data[int(rng.integers(len(data)))]
        h, w = o.shape[:2]
        if h < patch or w < patch:
            raise ValueError(f"image {h}x{w} smaller than patch {patch}")
        r = int(rng.integers(h - patch + 1))
        c = int(rng.integers(w - patch + 1))
        obs[b] = o[r : r + patch, c : c + patch]
        tgt[b] = t[r : r + patch, c : c + patch]
    return obs, tgt


def split_targets(tgt):
    return tgt[..., 0:1], tgt[..., 1:2], tgt[..., 2:3]


def train_step(params, spec, state, obs, tgt):
    rr, ri, c, cache = forward(params, spec, obs, "train")
    total, parts, out_grads = loss_and_grad((rr, ri, c), split_targets(tgt))
    grads = backward(params, cache, out_grads)
    params = apply_running_stats(params, cache)
    params, state = adam_step(params, grads, state)
    return params, state, total, parts


def evaluate_loss(params, spec, obs, tgt) -> float:
    """Loss of the inference-mode network on a fixed batch."""
    rr, ri, c, _ = forward(params, spec, obs, "infer")
    total, _, _ = loss_and_grad((rr, ri, c), split_targets(tgt))
    return total


def train(data, config: TrainConfig = TrainConfig(), spec: ModelSpec = ModelSpec(), params=None,
          state: AdamState | None = None, log_stream=None, on_log=None):
    """Train on in-memory ``(obs, target)`` pairs.

    Returns ``(params, state, history)``. ``history`` holds one record per
    logging window, ``{iter, total_loss, phase_loss, coh_loss, wall_ms}``; the
    same records are written as JSON lines to ``log_stream`` when given, and
    ``on_log(params, state, record)`` is called after each one. Passing the
    ``params``/``state`` of an earlier run continues it; iteration numbers and
    the patch stream carry on from ``state.step``.
    """
    if not data:
        raise ValueError("training set is empty")
    if params is None:
        params = init_params(spec, config.seed)
    state = state if state is not None else AdamState(lr=config.lr)
    start = state.step
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([config.seed, 0x7A1, start])))
    history = []
    acc = np.zeros(3)
    n_acc = 0
    t0 = time.perf_counter()
    for it in range(start + 1, start + config.iters + 1):
        obs, tgt = sample_batch(data, config.batch, config.patch, rng)
        params, state, total, parts = train_step(params, spec, state, obs, tgt)
        acc += (total, parts["phase"], parts["coh"])
        n_acc += 1
        if it % config.log_every == 0 or it == start + config.iters:
            rec = {
                "iter": it,
                "total_loss": float(acc[0] / n_acc),
                "phase_loss": float(acc[1] / n_acc),
                "coh_loss": float(acc[2] / n_acc),
                "wall_ms": int((time.perf_counter() - t0) * 1000),
            }
            history.append(rec)
            if log_stream is not None:
                log_stream.write(json.dumps(rec) + "\n")
                log_stream.flush()
            acc[:] = 0
            n_acc = 0
            if on_log is not None:
                on_log(params, state, rec)
    return params, state, history


def save_adam_state(path, state: AdamState) -> None:
    arrays = {f"m/{k}": v for k, v in state.m.items()}
    arrays.update({f"v/{k}": v for k, v in state.v.items()})
    meta = np.array([state.lr, state.beta1, state.beta2, state.eps, state.step], dtype=np.float64)
    with open(path, "wb") as fh:
        np.savez(fh, _meta=meta, **arrays)


def load_adam_state(path) -> AdamState:
    with np.load(path) as z:
        lr, b1, b2, eps, step = z["_meta"]
        m = {k[2:]: z[k] for k in z.files if k.startswith("m/")}
        v = {k[2:]: z[k] for k in z.files if k.startswith("v/")}
    return AdamState(float(lr), float(b1), float(b2), float(eps), int(step), m, v)
