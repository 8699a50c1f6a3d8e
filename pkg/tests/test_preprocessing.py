import numpy as np
import pytest
from sklearn.base import clone

from insarlite.preprocessing import (
    AmplitudeNormalizer,
    assemble_observation,
    lower_median,
    mad,
    modified_zscore,
    normalize_amplitude,
    observation_from_pair,
)
from insarlite.raster import Interferogram, Raster, SlcImage


class TestMad:
    def test_examples(self):
        assert mad([1, 2, 3, 4, 5]) == (3, 1)
        assert mad(np.full((3, 3), 2.5)) == (2.5, 0)
        assert mad([1, 1, 1, 100]) == (1, 0)

    def test_lower_median(self):
        assert lower_median([4, 1, 3, 2]) == 2

    def test_accepts_raster(self):
        assert mad(Raster(np.array([[1.0, 2.0, 3.0]]))) == (2, 1)

    def test_errors(self):
        with pytest.raises(ValueError):
            mad([])
        with pytest.raises(ValueError):
            mad([1.0, np.nan])


class TestZscore:
    def test_examples(self):
        z = modified_zscore(np.array([1, 2, 3, 4, 5.0]))
        assert z[2] == 0
        assert z[4] == pytest.approx(1.349)

    def test_constant_is_zero(self):
        assert np.all(modified_zscore(np.full(7, 3.0)) == 0)

    def test_mean_abs_fallback(self):
        # MAD is 0 here, so the scale falls back to 1.2533 * mean|A - 1|
        z = modified_zscore(np.array([1, 1, 1, 100.0]))
        assert z[3] == pytest.approx(0.6745 * 99 / (1.2533 * 99 / 4))


class TestNormalize:
    def test_tanh_examples(self):
        # median 3, MAD 1: A=3 -> mz 0; A = 3 +/- 7/0.6745 -> mz +/-7
        vals = np.array([3.0, 3 + 7 / 0.6745, 3 - 7 / 0.6745, 2, 4])
        out = normalize_amplitude(vals)
        assert out[0] == 0.5
        assert out[1] == pytest.approx(0.8808, abs=1e-4)
        assert out[2] == pytest.approx(0.1192, abs=1e-4)

    def test_open_interval_and_monotone(self):
        rng = np.random.default_rng(1)
        a = np.sort(np.concatenate([rng.rayleigh(0.5, 1000), [0.0, 1e6]]))
        out = normalize_amplitude(a)
        assert out.dtype == np.float32
        assert np.all(out > 0) and np.all(out < 1)
        assert np.all(np.diff(out) >= 0)

    @pytest.mark.parametrize("scale,offset", [(1.0, 0.0), (3.5, 2.0), (0.01, -0.5)])
    def test_median_maps_to_half(self, scale, offset):
        a = scale * np.random.default_rng(7).rayleigh(1, 101) + offset
        out = normalize_amplitude(a)
        med = np.argsort(a)[50]
        assert out[med] == 0.5
        assert np.all(out[a < a[med]] < 0.5) and np.all(out[a > a[med]] > 0.5)

    def test_estimator(self):
        rng = np.random.default_rng(2)
        a = rng.rayleigh(0.5, (20, 20))
        est = AmplitudeNormalizer().fit(a)
        assert est.median_ == mad(a)[0] and est.mad_ == mad(a)[1]
        np.testing.assert_array_equal(est.transform(a), normalize_amplitude(a))
        np.testing.assert_array_equal(clone(est).fit_transform(a), normalize_amplitude(a))
        assert est.get_params() == {}


class TestObservation:
    def test_zero_phase(self):
        ifg = Interferogram(np.ones((3, 3)), np.zeros((3, 3)))
        obs = assemble_observation(ifg, np.full((3, 3), 0.25), np.full((3, 3), 0.75))
        assert obs.data.shape == (3, 3, 4)
        np.testing.assert_array_equal(obs.data[1, 1], [1, 0, 0.25, 0.75])

    def test_quarter_turn(self):
        phase = np.zeros((2, 2))
        phase[0, 1] = np.pi / 2
        obs = assemble_observation(Interferogram(np.ones((2, 2)), phase), np.ones((2, 2)) / 2, np.ones((2, 2)) / 2)
        np.testing.assert_allclose(obs.data[0, 1, :2], [0, 1], atol=1e-7)

    def test_shape_mismatch(self):
        ifg = Interferogram(np.ones((3, 3)), np.zeros((3, 3)))
        with pytest.raises(ValueError):
            assemble_observation(ifg, np.ones((3, 4)), np.ones((3, 3)))

    def test_simulated_observation_invariants(self):
        from insarlite.simulator import SimConfig, simulate_sample

        s = simulate_sample(SimConfig.from_label("S3-F3-S", 64, 2))
        obs, _ = observation_from_pair(s.noisy_s1, s.noisy_s2)
        d = obs.data.astype(np.float64)
        np.testing.assert_allclose(d[..., 0] ** 2 + d[..., 1] ** 2, 1, atol=1e-5)
        assert d[..., 2:].min() > 0 and d[..., 2:].max() < 1

    def test_from_pair(self):
        rng = np.random.default_rng(3)
        s1 = SlcImage(rng.rayleigh(1, (8, 8)), np.zeros((8, 8)))
        s2 = SlcImage(rng.rayleigh(1, (8, 8)), rng.uniform(-3, 3, (8, 8)))
        obs, ifg = observation_from_pair(s1, s2)
        np.testing.assert_array_equal(obs.data[..., 2], normalize_amplitude(s1.amplitude))
        np.testing.assert_allclose(np.arctan2(obs.data[..., 1], obs.data[..., 0]), ifg.phase, atol=1e-6)
