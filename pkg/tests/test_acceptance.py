"""The eight acceptance criteria, each at its stated tolerance.

Run with ``pytest tests/test_acceptance.py``; the terminal summary ends with one
PASS/FAIL line per criterion. Criterion 6 evaluates the committed desk-scale
checkpoint (see ``scripts/desk_experiment.py``) on freshly regenerated test
sets.
"""
import math
import time

import numpy as np
import pytest

from insarlite.baselines import dilogarithm, ml_coherence, phase_std_from_coherence
from insarlite.desk import DESK_CHECKPOINT, desk_datasets, desk_report
from insarlite.metrics import phase_rmse, ssim_mean
from insarlite.network import ModelSpec, grad_check, infer, init_params, load_checkpoint, save_checkpoint, zero_params
from insarlite.preprocessing import normalize_amplitude
from insarlite.raster import SlcImage, phase_to_complex, read_raster, reconstruct_phase, wrap_phase, write_raster
from insarlite.simulator import SimConfig, add_speckle_noise, ground_truth_coherence, simulate_sample
from oracles import ssim_scalar


@pytest.mark.acceptance(1, "micro-model gradient check below 1e-5 in under a minute")
def test_gradient_correctness():
    t0 = time.perf_counter()
    report = grad_check(ModelSpec.micro(), seed=0, samples=200, size=8)
    elapsed = time.perf_counter() - t0
    print(f"gradcheck: max rel err {report.max_rel_error:.3e}, {report.checked} params, {elapsed:.1f} s")
    assert report.checked >= 200
    assert report.max_rel_error < 1e-5
    assert elapsed < 60


@pytest.mark.acceptance(2, "phase deviation endpoints and Li2(1)")
def test_phase_std_endpoints():
    assert abs(phase_std_from_coherence(1.0)) <= 1e-9
    assert abs(phase_std_from_coherence(0.0) - math.pi / math.sqrt(3)) <= 1e-9
    assert abs(dilogarithm(1.0) - math.pi**2 / 6) <= 1e-10


@pytest.mark.acceptance(3, "phase/complex, .rst and checkpoint round trips")
def test_round_trips(tmp_path):
    rng = np.random.default_rng(3)
    theta = rng.uniform(-np.pi, np.pi, 1_000_000)
    back = reconstruct_phase(*phase_to_complex(theta))
    assert np.max(np.abs(wrap_phase(back - theta))) <= 1e-6

    for k in range(20):
        shape = tuple(rng.integers(1, 40, 2)) + (int(rng.integers(1, 4)),)
        bits = rng.integers(0, 2**32, shape, dtype=np.uint32)
        data = bits.view(np.float32)  # arbitrary bit patterns, NaN payloads included
        write_raster(data, tmp_path / f"{k}.rst")
        assert read_raster(tmp_path / f"{k}.rst").data.tobytes() == data.tobytes()

    spec = ModelSpec()
    params = init_params(spec, 11)
    save_checkpoint(tmp_path / "a.ckpt", params, spec)
    loaded, _ = load_checkpoint(tmp_path / "a.ckpt")
    assert all(loaded[k].tobytes() == params[k].tobytes() for k in params)
    save_checkpoint(tmp_path / "b.ckpt", loaded, spec)
    assert (tmp_path / "a.ckpt").read_bytes() == (tmp_path / "b.ckpt").read_bytes()


def _random_amplitudes(rng, k):
    shape = tuple(rng.integers(8, 33, 2))
    kind = k % 4
    if kind == 0:
        return rng.rayleigh(rng.uniform(0.05, 1), shape)
    if kind == 1:
        return rng.uniform(0, 5, shape)
    if kind == 2:
        a = rng.exponential(1, shape)
        a[rng.uniform(size=shape) < 0.3] = 0
        return a
    return np.full(shape, rng.uniform(0, 3))


@pytest.mark.acceptance(4, "coherence and normalisation bounds, monotonicity")
def test_estimator_bounds():
    rng = np.random.default_rng(4)
    violations = 0
    for k in range(1000):
        a1 = _random_amplitudes(rng, k)
        a2 = _random_amplitudes(rng, k + 1)[: a1.shape[0], : a1.shape[1]]
        a2 = np.resize(a2, a1.shape)
        coh = ml_coherence(a1, a2, int(rng.choice([1, 3, 5, 7])))
        violations += int(np.sum((coh < 0) | (coh > 1)))
        norm = normalize_amplitude(a1)
        violations += int(np.sum((norm <= 0) | (norm >= 1)))
        order = np.argsort(a1, axis=None, kind="stable")
        violations += int(np.sum(np.diff(norm.ravel()[order]) < 0))
    sigmas = np.linspace(0.01, 3, 300)
    amps = rng.uniform(0.02, 2, (2, 1000))
    cohs = np.stack([ground_truth_coherence(amps[0], amps[1], s) for s in sigmas])
    violations += int(np.sum(np.diff(cohs, axis=0) >= 0))
    assert violations == 0


@pytest.mark.acceptance(5, "simulated noise variance and sample coherence")
def test_simulator_statistics():
    shape = (400, 400)  # 1.6e5 pixels
    rng = np.random.default_rng(5)
    for sigma in (0.2, 0.5, 0.8):
        clean = SlcImage(rng.rayleigh(0.5, shape), rng.uniform(-np.pi, np.pi, shape))
        noisy = add_speckle_noise((clean, clean), sigma, rng)
        for n in noisy:
            d = n.to_complex().astype(np.complex128) - clean.to_complex()
            for part in (d.real, d.imag):
                assert abs(part.var() / sigma**2 - 1) <= 0.05
    ones = np.ones(shape)
    for amp in (0.3, 1.0, 1.7):
        for sigma in (0.2, 0.5, 0.8):
            s = SlcImage(amp * ones, np.zeros(shape))
            n1, n2 = add_speckle_noise((s, s), sigma, rng)
            z1 = n1.to_complex().astype(np.complex128)
            z2 = n2.to_complex().astype(np.complex128)
            sample = np.abs(np.vdot(z2, z1)) / np.sqrt(np.vdot(z1, z1).real * np.vdot(z2, z2).real)
            expected = ground_truth_coherence(np.array([amp]), np.array([amp]), sigma)[0]
            assert abs(sample - expected) <= 0.02


@pytest.mark.acceptance(6, "desk-scale learning beats boxcar / ML coherence on both test sets")
def test_desk_learning(tmp_path_factory):
    assert DESK_CHECKPOINT.is_file(), f"desk checkpoint {DESK_CHECKPOINT} missing; run scripts/desk_experiment.py"
    _, tests = desk_datasets(tmp_path_factory.mktemp("desk"))
    report = desk_report(DESK_CHECKPOINT, tests)
    failures = []
    for label, r in report.items():
        m, b = r["model"], r["boxcar"]
        print(f"{label}: model {m}  baseline {b}")
        if not m["phase_rmse"] <= 0.9 * b["phase_rmse"]:
            failures.append(f"{label} phase RMSE {m['phase_rmse']:.4f} > 0.9 x {b['phase_rmse']:.4f}")
        if not m["ssim"] > b["ssim"]:
            failures.append(f"{label} SSIM {m['ssim']:.4f} <= {b['ssim']:.4f}")
        if not m["coh_rmse"] < b["coh_rmse"]:
            failures.append(f"{label} coherence RMSE {m['coh_rmse']:.4f} >= {b['coh_rmse']:.4f}")
    assert not failures, "; ".join(failures)


@pytest.mark.acceptance(7, "all-zero checkpoint returns the noisy phase and coherence 0.5 exactly")
def test_zero_model_identity(tmp_path):
    spec = ModelSpec()
    save_checkpoint(tmp_path / "zero.ckpt", zero_params(spec), spec)
    params, spec = load_checkpoint(tmp_path / "zero.ckpt")
    for label, size in (("S3-F3-S", 256), ("S1-F2-NS", 100)):
        s = simulate_sample(SimConfig.from_label(label, size, 9))
        phase, coh = infer(params, spec, s.noisy_s1, s.noisy_s2)
        assert np.array_equal(phase, s.noisy_interferogram.phase)
        assert np.all(coh == 0.5)


@pytest.mark.acceptance(8, "SSIM scalar oracle and phase RMSE wrap invariance")
def test_metric_oracles():
    rng = np.random.default_rng(8)
    for _ in range(20):
        p = rng.uniform(-np.pi, np.pi, (16, 16))
        t = rng.uniform(-np.pi, np.pi, (16, 16))
        assert abs(ssim_mean(p, t) - ssim_scalar(p.tolist(), t.tolist())) <= 1e-6
    violations = 0
    for _ in range(1000):
        shape = tuple(rng.integers(2, 20, 2))
        t = rng.uniform(-np.pi, np.pi, shape)
        p = rng.uniform(-np.pi, np.pi, shape)
        k = rng.integers(-5, 6, shape)
        shifted = p + 2 * np.pi * k
        if abs(phase_rmse(shifted, t) - phase_rmse(p, t)) > 1e-9:
            violations += 1
        if abs(phase_rmse(wrap_phase(shifted), t) - phase_rmse(p, t)) > 1e-9:
            violations += 1
    assert violations == 0
