"""Desk-scale reproduction of the learning comparison.

Two simulated configurations (dense fringes at low noise, medium fringes at
medium noise), 40 training and 10 test images each at 256x256. One model is
trained on both training sets and compared on each test set against the
5x5 boxcar filter and the 5x5 amplitude coherence estimator.
"""
from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .baselines import boxcar_filter, ml_coherence
from .metrics import coherence_rmse, phase_rmse, ssim_mean
from .network.checkpoint import load_checkpoint, save_checkpoint
from .network.infer import infer
from .network.model import ModelSpec
from .network.train import TrainConfig, load_adam_state, load_training_set, save_adam_state, train
from .pipeline import load_sample, slc_pair_from_sample
from .raster import form_interferogram
from .simulator import SimConfig, generate_dataset, load_manifest

DESK_LABELS = ("S1-F3-NS", "S2-F2-NS")
DESK_SIZE = 256
TRAIN_COUNT, TEST_COUNT = 40, 10
TRAIN_SEED, TEST_SEED = 101, 202
BASELINE_WINDOW = 5
DESK_HYPER = {"iters": 2400, "batch": 16, "patch": 64, "lr": 1e-3, "seed": 0}

_REPO = Path(__file__).resolve().parents[2]
DESK_CHECKPOINT = Path(os.environ.get("INSARLITE_DESK_CKPT", _REPO / "artifacts" / "desk" / "model.ckpt"))


def _ensure(root: Path, configs, count: int) -> Path:
    manifest = root / "manifest.json"
    if not manifest.is_file():
        generate_dataset(configs, count, root)
    return manifest


def desk_datasets(root) -> tuple[Path, dict[str, Path]]:
    """Generate (once) the training set and one test set per label."""
    root = Path(root)
    train_cfgs = [SimConfig.from_label(lab, DESK_SIZE, TRAIN_SEED) for lab in DESK_LABELS]
    train_manifest = _ensure(root / "train", train_cfgs, TRAIN_COUNT)
    tests = {
        lab: _ensure(root / f"test-{lab}", [SimConfig.from_label(lab, DESK_SIZE, TEST_SEED)], TEST_COUNT)
        for lab in DESK_LABELS
    }
    return train_manifest, tests


def _state_path(ckpt: Path) -> Path:
    return ckpt.with_suffix(".adam.npz")


def train_desk_model(train_manifest, ckpt: Path, iters: int = DESK_HYPER["iters"], log_stream=None):
    """Train (or resume) until ``iters`` total iterations, checkpointing every 100."""
    ckpt = Path(ckpt)
    ckpt.parent.mkdir(parents=True, exist_ok=True)
    spec = ModelSpec()
    params = state = None
    if ckpt.is_file() and _state_path(ckpt).is_file():
        params, spec = load_checkpoint(ckpt)
        state = load_adam_state(_state_path(ckpt))
    done = state.step if state else 0
    if done >= iters:
        return params
    data = load_training_set(train_manifest)
    hyper = {k: v for k, v in DESK_HYPER.items() if k != "iters"}
    log_path = ckpt.with_name("train_log.jsonl")

    def on_log(p, s, rec):
        save_checkpoint(ckpt, p, spec)
        save_adam_state(_state_path(ckpt), s)
        with open(log_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(rec) + "\n")

    params, _, _ = train(data, TrainConfig(iters=iters - done, **hyper), spec, params, state,
                         log_stream=log_stream, on_log=on_log)
    return params


def desk_report(ckpt: Path, test_manifests: dict) -> dict:
    """Per-label mean metrics of the model and the classical baselines."""
    params, spec = load_checkpoint(ckpt)
    report = {}
    for label, manifest in test_manifests.items():
        entries, base = load_manifest(manifest)
        rows = {"model": [], "boxcar": []}
        for e in entries:
            sample = load_sample(e, base)
            s1, s2 = slc_pair_from_sample(sample)
            truth_phase, truth_coh = sample["truth_phase"], sample["truth_coh"]
            phase, coh = infer(params, spec, s1, s2)
            rows["model"].append(
                (phase_rmse(phase, truth_phase), ssim_mean(phase, truth_phase), coherence_rmse(coh, truth_coh))
            )
            bphase, _ = boxcar_filter(form_interferogram(s1, s2), BASELINE_WINDOW)
            bcoh = ml_coherence(s1.amplitude, s2.amplitude, BASELINE_WINDOW)
            rows["boxcar"].append(
                (phase_rmse(bphase, truth_phase), ssim_mean(bphase, truth_phase), coherence_rmse(bcoh, truth_coh))
            )
        report[label] = {
            name: dict(zip(("phase_rmse", "ssim", "coh_rmse"), np.mean(vals, axis=0).tolist()))
            for name, vals in rows.items()
        }
    return report
