"""Glue between datasets on disk and the filters: load samples, write predictions."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .raster import SlcImage, read_raster, write_raster
from .simulator import load_manifest


def load_sample(entry: dict, base) -> dict[str, np.ndarray]:
    """Read all rasters of one manifest entry as 2-D float32 planes."""
    base = Path(base)
    return {key: read_raster(base / rel).plane() for key, rel in entry["paths"].items()}


def slc_pair_from_sample(sample: dict) -> tuple[SlcImage, SlcImage]:
    """SLC pair reproducing the stored noisy interferogram.

    Only the interferometric phase is stored, so it is placed on the second
    SLC and the first gets zero phase.
    """
    a1, a2, phase = sample["noisy_a1"], sample["noisy_a2"], sample["noisy_phase"]
    return SlcImage(a1, np.zeros_like(phase)), SlcImage(a2, phase)


def predict_dataset(manifest, pred_dir, method: str, predictor) -> list[Path]:
    """Run ``predictor(s1, s2) -> (phase, coherence)`` on every sample.

    Outputs go to ``<pred_dir>/<method>/<label>/<index>/{phase,coh}.rst``.
    """
    entries, base = load_manifest(manifest)
    written = []
    for e in entries:
        s1, s2 = slc_pair_from_sample(load_sample(e, base))
        phase, coh = predictor(s1, s2)
        out = Path(pred_dir) / method / e["label"] / str(e["index"])
        out.mkdir(parents=True, exist_ok=True)
        write_raster(np.asarray(phase, np.float32), out / "phase.rst")
        write_raster(np.asarray(coh, np.float32), out / "coh.rst")
        written.append(out)
    return written
