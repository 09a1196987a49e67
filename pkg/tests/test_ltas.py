import numpy as np
import pytest

from bwext.audio import AudioBuffer
from bwext.degradation import FilterSpec, apply_butterworth, sos_frequency_response, design_butterworth_lowpass
from bwext.errors import CutoffNotFoundError
from bwext.ltas import (
    LtasCurve,
    average_curves,
    compute_ltas,
    difference_curve,
    estimate_cutoff,
)

SR = 22050


@pytest.fixture(scope="module")
def white_noise():
    rng = np.random.default_rng(0)
    return AudioBuffer(rng.standard_normal(60 * SR) * 0.1, SR)


class TestComputeLtas:
    def test_white_noise_flat(self, white_noise):
        curve = compute_ltas(white_noise, 1.0 / 3.0)
        sel = curve.frequencies > 100
        levels = curve.levels[sel]
        assert levels.max() - levels.min() < 2.0  # +-1 dB about the mean

    def test_amplitude_doubling_shifts_6db(self, white_noise):
        a = compute_ltas(white_noise, 1.0 / 3.0)
        b = compute_ltas(AudioBuffer(2 * white_noise.samples, SR), 1.0 / 3.0)
        np.testing.assert_allclose(b.levels - a.levels, 6.0206, atol=0.01)

    def test_tone_peak_location(self):
        t = np.arange(10 * SR) / SR
        tone = AudioBuffer(0.5 * np.sin(2 * np.pi * 1000 * t), SR)
        curve = compute_ltas(tone, 1.0 / 12.0)
        peak_freq = curve.frequencies[np.argmax(curve.levels)]
        grid_step = curve.frequencies[1] - curve.frequencies[0]
        assert abs(peak_freq - 1000.0) <= grid_step

    def test_too_short_rejected(self):
        with pytest.raises(ValueError):
            compute_ltas(AudioBuffer(np.zeros(1000), SR), 1.0 / 3.0)


class TestDifferenceCurve:
    def test_identical_curves_zero(self, white_noise):
        c = compute_ltas(white_noise, 1.0 / 3.0)
        d = difference_curve(c, c)
        np.testing.assert_allclose(d.levels, 0.0, atol=1e-12)

    def test_constant_offset_removed(self, white_noise):
        c = compute_ltas(white_noise, 1.0 / 3.0)
        shifted = LtasCurve(c.frequencies, c.levels + 5.0, c.smoothing_fraction)
        d = difference_curve(shifted, c)
        np.testing.assert_allclose(d.levels, 0.0, atol=1e-12)

    def test_tracks_butterworth_response(self, white_noise):
        spec = FilterSpec("iir-butterworth", 3000, SR)
        filtered = apply_butterworth(white_noise, spec)
        old = compute_ltas(filtered, 1.0 / 12.0)
        modern = compute_ltas(white_noise, 1.0 / 12.0)
        diff = difference_curve(old, modern)

        sel = (diff.frequencies >= 500) & (diff.frequencies <= 8000)
        response_db = 20 * np.log10(
            np.abs(sos_frequency_response(design_butterworth_lowpass(spec), diff.frequencies[sel], SR))
        )
        # the filter response rescaled the same way as the measured curve
        band = (diff.frequencies[sel] >= 500) & (diff.frequencies[sel] <= 2000)
        response_db = response_db - response_db[band].mean()
        np.testing.assert_allclose(diff.levels[sel], response_db, atol=1.5)

    def test_grid_mismatch_rejected(self, white_noise):
        c = compute_ltas(white_noise, 1.0 / 3.0)
        other = LtasCurve(c.frequencies[:-1], c.levels[:-1], c.smoothing_fraction)
        with pytest.raises(ValueError):
            difference_curve(c, other)


class TestEstimateCutoff:
    def test_synthetic_butterworth_difference(self, white_noise):
        spec = FilterSpec("iir-butterworth", 3000, SR)
        filtered = apply_butterworth(white_noise, spec)
        diff = difference_curve(
            compute_ltas(filtered, 1.0 / 12.0), compute_ltas(white_noise, 1.0 / 12.0)
        )
        assert abs(estimate_cutoff(diff) - 3000.0) <= 150.0

    def test_ramp_crossing_at_grid_point(self):
        freqs = np.linspace(100, 10000, 100)
        levels = np.zeros(100)
        idx = 60
        levels[idx:] = -3.0 - 0.5 * np.arange(100 - idx)
        levels[idx] = -3.0
        curve = LtasCurve(freqs, levels, 1.0 / 3.0)
        assert estimate_cutoff(curve) == pytest.approx(freqs[idx])

    def test_flat_curve_not_found(self):
        curve = LtasCurve(np.linspace(100, 10000, 50), np.zeros(50), 1.0 / 3.0)
        with pytest.raises(CutoffNotFoundError):
            estimate_cutoff(curve)


class TestAveraging:
    def test_mean_of_difference_curves(self, white_noise):
        rng = np.random.default_rng(5)
        olds = [
            compute_ltas(AudioBuffer(rng.standard_normal(10 * SR) * 0.1, SR), 1.0 / 3.0)
            for _ in range(2)
        ]
        moderns = [
            compute_ltas(AudioBuffer(rng.standard_normal(10 * SR) * 0.1, SR), 1.0 / 3.0)
            for _ in range(3)
        ]
        diffs = [difference_curve(o, m) for o in olds for m in moderns]
        assert len(diffs) == 6
        avg = average_curves(diffs)
        direct = sum(d.levels for d in diffs) / 6
        np.testing.assert_allclose(avg.levels, direct, atol=1e-12)
