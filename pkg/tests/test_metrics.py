import json

import numpy as np
import pytest

from insarlite.metrics import coherence_rmse, evaluate_dataset, phase_rmse, ssim_map, ssim_mean
from insarlite.raster import read_raster, wrap_phase, write_raster
from insarlite.simulator import SimConfig, generate_dataset, load_manifest
from oracles import ssim_scalar, wrapped_rmse_scalar


def _phase(rng, shape=(16, 16)):
    return rng.uniform(-np.pi, np.pi, shape)


class TestPhaseRmse:
    def test_examples(self):
        t = _phase(np.random.default_rng(0))
        assert phase_rmse(t, t) == 0
        assert phase_rmse(wrap_phase(t + 2 * np.pi), t) == pytest.approx(0, abs=1e-12)
        assert phase_rmse(wrap_phase(t + np.pi / 2), t) == pytest.approx(np.pi / 2, abs=1e-12)

    def test_scalar_oracle(self):
        rng = np.random.default_rng(1)
        p, t = _phase(rng), _phase(rng)
        assert phase_rmse(p, t) == pytest.approx(wrapped_rmse_scalar(p.ravel(), t.ravel()), abs=1e-12)

    def test_symmetric_and_rotation_invariant(self):
        rng = np.random.default_rng(6)
        p, t = _phase(rng), _phase(rng)
        assert phase_rmse(p, t) == pytest.approx(phase_rmse(t, p), abs=1e-12)
        assert phase_rmse(wrap_phase(p + 1.3), wrap_phase(t + 1.3)) == pytest.approx(phase_rmse(p, t), abs=1e-12)
        assert coherence_rmse(np.abs(p), np.abs(t)) == coherence_rmse(np.abs(t), np.abs(p))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            phase_rmse(np.zeros((3, 3)), np.zeros((3, 4)))


class TestSsim:
    def test_identical(self):
        t = _phase(np.random.default_rng(2), (40, 30))
        assert ssim_mean(t, t) == 1.0

    def test_offset_below_one(self):
        t = np.random.default_rng(3).uniform(0, 1, (16, 16))
        assert ssim_mean(t + 3.0, t) < 1

    def test_scalar_oracle(self):
        rng = np.random.default_rng(4)
        for _ in range(3):
            p, t = _phase(rng), _phase(rng)
            assert ssim_mean(p, t) == pytest.approx(ssim_scalar(p.tolist(), t.tolist()), abs=1e-6)

    def test_map_shape_and_min_size(self):
        assert ssim_map(np.zeros((20, 16)), np.zeros((20, 16))).shape == (10, 6)
        with pytest.raises(ValueError):
            ssim_mean(np.zeros((10, 10)), np.zeros((10, 10)))


class TestCoherenceRmse:
    def test_examples(self):
        t = np.random.default_rng(5).uniform(0.1, 0.8, (8, 8))
        assert coherence_rmse(t, t) == 0
        assert coherence_rmse(t + 0.1, t) == pytest.approx(0.1)
        assert coherence_rmse(np.zeros((4, 4)), np.ones((4, 4))) == 1


def _write_predictions(tmp_path, manifest, method, fn):
    entries, base = load_manifest(manifest)
    for e in entries:
        out = tmp_path / "pred" / method / e["label"] / str(e["index"])
        out.mkdir(parents=True)
        phase = read_raster(base / e["paths"]["truth_phase"]).plane()
        coh = read_raster(base / e["paths"]["truth_coh"]).plane()
        p, c = fn(phase, coh)
        write_raster(p, out / "phase.rst")
        write_raster(c, out / "coh.rst")
    return entries


class TestEvaluateDataset:
    @pytest.fixture
    def dataset(self, tmp_path):
        cfgs = [SimConfig.from_label(lab, 64, 3) for lab in ("S1-F1-NS", "S2-F2-S")]
        generate_dataset(cfgs, 2, tmp_path / "data")
        return tmp_path / "data" / "manifest.json"

    def test_perfect(self, tmp_path, dataset):
        _write_predictions(tmp_path, dataset, "oracle", lambda p, c: (p, c))
        report = evaluate_dataset(tmp_path / "pred", dataset)
        assert [c["label"] for c in report["configs"]] == ["S1-F1-NS", "S2-F2-S"]
        for block in [c["methods"] for c in report["configs"]] + [report["grand"]["methods"]]:
            [m] = block
            assert m["name"] == "oracle"
            assert m["phase_rmse"] == 0 and m["coh_rmse"] == 0
            assert m["ssim"] == pytest.approx(1, abs=1e-12)
        json.dumps(report)

    def test_matches_per_image(self, tmp_path):
        generate_dataset([SimConfig.from_label("S3-F3-NS", 64, 1)], 1, tmp_path / "d")
        manifest = tmp_path / "d" / "manifest.json"
        [e] = _write_predictions(tmp_path, manifest, "shift", lambda p, c: (wrap_phase(p + 0.3), c * 0.5))
        base = tmp_path / "d"
        truth = read_raster(base / e["paths"]["truth_phase"]).plane()
        coh = read_raster(base / e["paths"]["truth_coh"]).plane()
        [m] = evaluate_dataset(tmp_path / "pred", manifest)["configs"][0]["methods"]
        assert m["phase_rmse"] == pytest.approx(phase_rmse(wrap_phase(truth + 0.3), truth))
        assert m["ssim"] == pytest.approx(ssim_mean(wrap_phase(truth + 0.3), truth))
        assert m["coh_rmse"] == pytest.approx(coherence_rmse(coh * 0.5, coh))

    def test_missing_prediction_names_sample(self, tmp_path, dataset):
        _write_predictions(tmp_path, dataset, "m", lambda p, c: (p, c))
        (tmp_path / "pred" / "m" / "S2-F2-S" / "1" / "coh.rst").unlink()
        with pytest.raises(FileNotFoundError, match="S2-F2-S/1"):
            evaluate_dataset(tmp_path / "pred", dataset)
