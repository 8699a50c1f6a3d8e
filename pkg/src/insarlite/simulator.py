"""Synthetic SLC pair generator with ground-truth phase and coherence.

A sample is built in six steps: a zero-phase first SLC whose Rayleigh
amplitude ramps from 0.1 to 1.0 across the columns, a second SLC carrying a
sum of random Gaussian phase bubbles, optional low-amplitude bands, additive
complex Gaussian noise on both SLCs, the clean and noisy interferograms, and
the closed-form coherence of the noise process.

Every random draw comes from a Philox stream keyed by
``(seed, config index, sample index, step)``, so samples can be regenerated
independently and in any order.
"""
from __future__ import annotations

import itertools
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .raster import SlcImage, form_interferogram, wrap_phase, write_raster

__all__ = [
    "NOISE_LEVELS",
    "FRINGE_LEVELS",
    "ALL_LABELS",
    "SimConfig",
    "GaussianBubble",
    "Strip",
    "SimSample",
    "sample_rng",
    "draw_bubbles",
    "bubble_phase",
    "rayleigh_ramp_amplitude",
    "simulate_clean_pair",
    "draw_strips",
    "apply_amplitude_strips",
    "add_speckle_noise",
    "ground_truth_coherence",
    "simulate_sample",
    "generate_dataset",
    "load_manifest",
]

NOISE_LEVELS = {"S1": 0.2, "S2": 0.5, "S3": 0.8}

# count range, sigma range (px at a 1000 px side), max |amplitude| (rad)
FRINGE_LEVELS = {
    "F1": {"count": (3, 6), "sigma": (40.0, 80.0), "amplitude": 4 * np.pi},
    "F2": {"count": (6, 12), "sigma": (20.0, 50.0), "amplitude": 8 * np.pi},
    "F3": {"count": (12, 24), "sigma": (10.0, 30.0), "amplitude": 12 * np.pi},
}

ALL_LABELS = tuple(
    f"{s}-{f}-{k}" for s, f, k in itertools.product(NOISE_LEVELS, FRINGE_LEVELS, ("S", "NS"))
)

RAMP_START, RAMP_END = 0.1, 1.0
AMP_CLAMP = (0.02, 2.0)
REFERENCE_SIDE = 1000.0

# stream ids for sample_rng
STEP_AMPLITUDE, STEP_BUBBLES, STEP_STRIPS, STEP_NOISE = range(4)


@dataclass(frozen=True)
class SimConfig:
    noise_level: str = "S1"
    fringe_level: str = "F1"
    strips: bool = False
    size: int = 256
    seed: int = 0

    def __post_init__(self):
        if self.noise_level not in NOISE_LEVELS:
            raise ValueError(f"unknown noise level {self.noise_level!r}")
        if self.fringe_level not in FRINGE_LEVELS:
            raise ValueError(f"unknown fringe level {self.fringe_level!r}")
        if self.size < 64:
            raise ValueError(f"size must be >= 64, got {self.size}")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")

    @property
    def sigma_v(self) -> float:
        return NOISE_LEVELS[self.noise_level]

    @property
    def label(self) -> str:
        return f"{self.noise_level}-{self.fringe_level}-{'S' if self.strips else 'NS'}"

    @classmethod
    def from_label(cls, label: str, size: int = 256, seed: int = 0) -> "SimConfig":
        try:
            noise, fringe, strips = label.split("-")
        except ValueError:
            raise ValueError(f"bad config label {label!r}; expected e.g. 'S1-F2-NS'") from None
        if strips not in ("S", "NS"):
            raise ValueError(f"bad strip flag in label {label!r}")
        return cls(noise, fringe, strips == "S", size, seed)


@dataclass(frozen=True)
class GaussianBubble:
    center: tuple[float, float]
    sigma: float
    amplitude: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("bubble sigma must be > 0")


@dataclass(frozen=True)
class Strip:
    """An axis-aligned low-amplitude band spanning the full image."""

    axis: int  # 0: horizontal band of rows, 1: vertical band of columns
    start: int
    width: int
    factor: float


@dataclass(frozen=True, eq=False)
class SimSample:
    config: SimConfig
    index: int
    clean_s1: SlcImage
    clean_s2: SlcImage
    noisy_s1: SlcImage
    noisy_s2: SlcImage
    truth_phase: np.ndarray
    truth_coherence: np.ndarray
    bubbles: tuple = field(default=())
    strips: tuple = field(default=())

    @property
    def noisy_interferogram(self):
        return form_interferogram(self.noisy_s1, self.noisy_s2)


def sample_rng(seed: int, index: int, step: int, config_id: int = 0) -> np.random.Generator:
    """Counter-based generator for one generation step of one sample."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, config_id, index, step])))


def _config_id(cfg: SimConfig) -> int:
    return ALL_LABELS.index(cfg.label)


def draw_bubbles(cfg: SimConfig, rng: np.random.Generator) -> list[GaussianBubble]:
    level = FRINGE_LEVELS[cfg.fringe_level]
    scale = cfg.size / REFERENCE_SIDE
    lo, hi = level["count"]
    count = int(rng.integers(lo, hi + 1))
    bubbles = []
    for _ in range(count):
        center = tuple(rng.uniform(0, cfg.size, size=2))
        sigma = rng.uniform(*level["sigma"]) * scale
        amplitude = rng.choice([-1.0, 1.0]) * rng.uniform(0.0, level["amplitude"])
        bubbles.append(GaussianBubble(center, float(sigma), float(amplitude)))
    return bubbles


def bubble_phase(bubbles, shape) -> np.ndarray:
    """Unwrapped sum of Gaussian bubbles on a ``shape`` grid (float64)."""
    rows = np.arange(shape[0], dtype=np.float64)[:, None]
    cols = np.arange(shape[1], dtype=np.float64)[None, :]
    phase = np.zeros(shape, dtype=np.float64)
    for b in bubbles:
        r0, c0 = b.center
        # separable: exp(-(dr^2 + dc^2)/2s^2) = exp(-dr^2/2s^2) * exp(-dc^2/2s^2)
        gr = np.exp(-((rows - r0) ** 2) / (2 * b.sigma**2))
        gc = np.exp(-((cols - c0) ** 2) / (2 * b.sigma**2))
        phase += b.amplitude * gr * gc
    return phase


def rayleigh_ramp_amplitude(shape, rng: np.random.Generator) -> np.ndarray:
    """Rayleigh amplitudes whose column mean rises linearly from 0.1 to 1.0."""
    h, w = shape
    mean = np.linspace(RAMP_START, RAMP_END, w)
    scale = mean / np.sqrt(np.pi / 2)
    amp = rng.rayleigh(scale=np.broadcast_to(scale, (h, w)))
    return np.clip(amp, *AMP_CLAMP)


def simulate_clean_pair(cfg: SimConfig, rng=None, bubbles=None, index: int = 0):
    """Clean SLC pair: zero-phase ``S1`` and bubble-phase ``S2`` sharing one amplitude.

    ``rng`` may be a single generator used for every draw; by default the
    per-step streams of ``sample_rng`` are used. ``bubbles`` overrides the
    random bubble draw (an empty list gives a motion-free pair).
    """
    shape = (cfg.size, cfg.size)
    cid = _config_id(cfg)
    amp_rng = rng if rng is not None else sample_rng(cfg.seed, index, STEP_AMPLITUDE, cid)
    amp = rayleigh_ramp_amplitude(shape, amp_rng)
    if bubbles is None:
        bub_rng = rng if rng is not None else sample_rng(cfg.seed, index, STEP_BUBBLES, cid)
        bubbles = draw_bubbles(cfg, bub_rng)
    phase2 = wrap_phase(bubble_phase(bubbles, shape).astype(np.float32))
    s1 = SlcImage(amp, np.zeros(shape, dtype=np.float32))
    s2 = SlcImage(amp, phase2)
    return s1, s2


def draw_strips(cfg: SimConfig, rng: np.random.Generator) -> list[Strip]:
    n = int(rng.integers(1, 5))
    strips = []
    for _ in range(n):
        width = int(round(rng.uniform(0.04, 0.10) * cfg.size))
        start = int(rng.integers(0, cfg.size - width + 1))
        strips.append(Strip(int(rng.integers(0, 2)), start, width, float(rng.uniform(0.05, 0.25))))
    return strips


def apply_amplitude_strips(pair, cfg: SimConfig, rng=None, strips=None, index: int = 0):
    """Damp 1-4 full-length bands of both clean amplitudes to < 0.3x their value.

    Returns the pair unchanged when ``cfg.strips`` is false and no explicit
    ``strips`` are given. Phases are passed through untouched.
    """
    s1, s2 = pair
    if strips is None:
        if not cfg.strips:
            return pair
        rng = rng if rng is not None else sample_rng(cfg.seed, index, STEP_STRIPS, _config_id(cfg))
        strips = draw_strips(cfg, rng)
    gain = np.ones(s1.shape, dtype=np.float64)
    for st in strips:
        if not 0 < st.factor < 0.3:
            raise ValueError(f"strip factor must be in (0, 0.3), got {st.factor}")
        band = slice(st.start, st.start + st.width)
        if st.axis == 0:
            gain[band, :] = np.minimum(gain[band, :], st.factor)
        else:
            gain[:, band] = np.minimum(gain[:, band], st.factor)
    return (
        SlcImage((s1.amplitude * gain).astype(np.float32), s1.phase),
        SlcImage((s2.amplitude * gain).astype(np.float32), s2.phase),
    )


def add_speckle_noise(pair, sigma_v: float, rng: np.random.Generator):
    """Add independent N(0, sigma_v^2) noise to the real and imaginary part of each SLC."""
    if not sigma_v > 0:
        raise ValueError(f"sigma_v must be > 0, got {sigma_v}")
    s1, s2 = pair
    noise = rng.standard_normal((4,) + s1.shape) * sigma_v
    out = []
    for k, s in enumerate((s1, s2)):
        z = s.to_complex() + noise[2 * k] + 1j * noise[2 * k + 1]
        out.append(SlcImage.from_complex(z))
    return tuple(out)


def ground_truth_coherence(a1, a2, sigma_v: float) -> np.ndarray:
    """Coherence of ``A*exp(i*phi) + n`` with ``n`` circular Gaussian of power ``2*sigma_v^2``."""
    a1 = np.asarray(a1, dtype=np.float64)
    a2 = np.asarray(a2, dtype=np.float64)
    if np.any(a1 < 0) or np.any(a2 < 0):
        raise ValueError("amplitudes must be nonnegative")
    noise_power = 2.0 * sigma_v**2
    denom = np.sqrt((a1**2 + noise_power) * (a2**2 + noise_power))
    with np.errstate(invalid="ignore", divide="ignore"):
        coh = np.where(denom > 0, a1 * a2 / denom, 0.0)
    return np.clip(coh, 0.0, 1.0)


def simulate_sample(cfg: SimConfig, index: int = 0, bubbles=None, strips=None) -> SimSample:
    """Generate one complete sample; a pure function of ``(cfg, index)``."""
    cid = _config_id(cfg)
    if bubbles is None:
        bubbles = draw_bubbles(cfg, sample_rng(cfg.seed, index, STEP_BUBBLES, cid))
    if strips is None:
        strips = draw_strips(cfg, sample_rng(cfg.seed, index, STEP_STRIPS, cid)) if cfg.strips else []
    clean = simulate_clean_pair(cfg, bubbles=bubbles, index=index)
    clean = apply_amplitude_strips(clean, cfg, strips=strips, index=index)
    noisy = add_speckle_noise(clean, cfg.sigma_v, sample_rng(cfg.seed, index, STEP_NOISE, cid))
    truth = form_interferogram(*clean)
    coh = ground_truth_coherence(clean[0].amplitude, clean[1].amplitude, cfg.sigma_v)
    return SimSample(
        cfg, index, clean[0], clean[1], noisy[0], noisy[1],
        truth.phase, coh.astype(np.float32), tuple(bubbles), tuple(strips),
    )


SAMPLE_FILES = ("noisy_a1", "noisy_a2", "noisy_phase", "truth_phase", "truth_coh")


def generate_dataset(configs, count_per_config: int, out_dir) -> list[dict]:
    """Write ``count_per_config`` samples per config under ``out_dir``.

    Layout: ``<out>/<label>/<index>/{noisy_a1,...}.rst`` plus ``<out>/manifest.json``.
    Returns the manifest entries (paths relative to ``out_dir``).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = []
    for cfg in configs:
        for index in range(count_per_config):
            sample = simulate_sample(cfg, index)
            rel = Path(cfg.label) / str(index)
            (out / rel).mkdir(parents=True, exist_ok=True)
            ifg = sample.noisy_interferogram
            planes = {
                "noisy_a1": sample.noisy_s1.amplitude,
                "noisy_a2": sample.noisy_s2.amplitude,
                "noisy_phase": ifg.phase,
                "truth_phase": sample.truth_phase,
                "truth_coh": sample.truth_coherence,
            }
            paths = {}
            for name in SAMPLE_FILES:
                path = rel / f"{name}.rst"
                write_raster(planes[name], out / path)
                paths[name] = path.as_posix()
            manifest.append(
                {"label": cfg.label, "index": index, "seed": cfg.seed, "size": cfg.size, "paths": paths}
            )
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return manifest


def load_manifest(path) -> tuple[list[dict], Path]:
    """Read a manifest; returns ``(entries, base_dir)`` for resolving relative paths."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        entries = json.load(fh)
    if not isinstance(entries, list):
        raise ValueError(f"{os.fspath(path)}: manifest must be a JSON array")
    return entries, path.parent
