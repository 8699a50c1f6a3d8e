"""Evaluation metrics on wrapped phase and coherence maps, and the dataset report."""
from __future__ import annotations

from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ._validation import check_plane, check_same_shape
from .raster import read_raster, wrap_phase
from .simulator import load_manifest

__all__ = [
    "SSIM_WINDOW",
    "SSIM_SIGMA",
    "gaussian_window",
    "phase_rmse",
    "ssim_map",
    "ssim_mean",
    "coherence_rmse",
    "evaluate_dataset",
]

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1, SSIM_K2 = 0.01, 0.03
PHASE_RANGE = 2 * np.pi
_KEYS = ("phase_rmse", "ssim", "coh_rmse")


def phase_rmse(pred, truth) -> float:
    """RMSE of the wrapped difference ``wrap(pred - truth)``, in radians."""
    p = check_plane(pred, "pred")
    t = check_plane(truth, "truth")
    check_same_shape(p, t, ("pred", "truth"))
    d = wrap_phase(p - t)
    return float(np.sqrt(np.mean(d * d)))


def coherence_rmse(pred, truth) -> float:
    p = check_plane(pred, "pred")
    t = check_plane(truth, "truth")
    check_same_shape(p, t, ("pred", "truth"))
    return float(np.sqrt(np.mean((p - t) ** 2)))


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    """Normalised 1-D Gaussian taps; the 2-D window is their outer product."""
    x = np.arange(size) - (size - 1) / 2
    g = np.exp(-(x**2) / (2 * sigma**2))
    return g / g.sum()


def _filter_valid(img: np.ndarray, g: np.ndarray) -> np.ndarray:
    k = g.size
    rows = sliding_window_view(img, k, axis=0) @ g
    return sliding_window_view(rows, k, axis=1) @ g


def ssim_map(pred, truth, data_range: float = PHASE_RANGE) -> np.ndarray:
    """SSIM at every fully interior 11x11 window position (Gaussian sigma 1.5)."""
    x = check_plane(pred, "pred")
    y = check_plane(truth, "truth")
    check_same_shape(x, y, ("pred", "truth"))
    if min(x.shape) < SSIM_WINDOW:
        raise ValueError(f"SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {x.shape}")
    g = gaussian_window()
    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2
    mx = _filter_valid(x, g)
    my = _filter_valid(y, g)
    sxx = _filter_valid(x * x, g) - mx * mx
    syy = _filter_valid(y * y, g) - my * my
    sxy = _filter_valid(x * y, g) - mx * my
    num = (2 * mx * my + c1) * (2 * sxy + c2)
    den = (mx * mx + my * my + c1) * (sxx + syy + c2)
    return num / den


def ssim_mean(pred, truth, data_range: float = PHASE_RANGE) -> float:
    return float(np.mean(ssim_map(pred, truth, data_range)))


def _method_dirs(pred_dir: Path) -> list[Path]:
    methods = sorted(p for p in pred_dir.iterdir() if p.is_dir())
    if not methods:
        raise FileNotFoundError(f"{pred_dir}: no method subdirectories with predictions")
    return methods


def evaluate_dataset(pred_dir, manifest) -> dict:
    """Score every method under ``pred_dir`` against the manifest ground truth.

    Predictions are read from ``<pred_dir>/<method>/<label>/<index>/{phase,coh}.rst``.
    Per config the report holds the mean over samples of each per-image metric;
    ``grand`` averages those config means. Configs are sorted by label.
    """
    pred_dir = Path(pred_dir)
    entries, base = load_manifest(manifest)
    methods = _method_dirs(pred_dir)
    per = {}  # (label, method) -> list of (phase_rmse, ssim, coh_rmse)
    for e in entries:
        truth_phase = read_raster(base / e["paths"]["truth_phase"]).plane()
        truth_coh = read_raster(base / e["paths"]["truth_coh"]).plane()
        for mdir in methods:
            sample_dir = mdir / e["label"] / str(e["index"])
            files = {k: sample_dir / f"{k}.rst" for k in ("phase", "coh")}
            for path in files.values():
                if not path.is_file():
                    raise FileNotFoundError(
                        f"missing prediction for sample {e['label']}/{e['index']} "
                        f"(method {mdir.name}): {path}"
                    )
            phase = read_raster(files["phase"]).plane()
            coh = read_raster(files["coh"]).plane()
            per.setdefault((e["label"], mdir.name), []).append(
                (phase_rmse(phase, truth_phase), ssim_mean(phase, truth_phase), coherence_rmse(coh, truth_coh))
            )

    def summary(name, rows):
        arr = np.asarray(rows, dtype=np.float64)
        return {"name": name, **{k: float(arr[:, j].mean()) for j, k in enumerate(_KEYS)}}

    labels = sorted({e["label"] for e in entries})
    configs = [
        {"label": label, "methods": [summary(m.name, per[(label, m.name)]) for m in methods]}
        for label in labels
    ]
    grand = [
        summary(m.name, [[c["methods"][i][k] for k in _KEYS] for c in configs])
        for i, m in enumerate(methods)
    ]
    return {"configs": configs, "grand": {"methods": grand}}
