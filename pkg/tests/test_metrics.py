import numpy as np
import pytest

from bwext.audio import AudioBuffer, resample
from bwext.errors import ProviderError
from bwext.metrics import (
    GaussianStats,
    SurrogateEmbeddingProvider,
    embedding_distance,
    fad_protocol,
    fit_gaussian,
    frechet_distance,
    lsd,
)

SR = 22050


def sqrtm_oracle(a):
    """Symmetric PSD matrix square root by eigendecomposition."""
    vals, vecs = np.linalg.eigh((a + a.T) / 2)
    return vecs @ np.diag(np.sqrt(np.clip(vals, 0, None))) @ vecs.T


def frechet_oracle(b, e):
    """tr sqrt(Sb Se) via the symmetrized similarity transform."""
    sb_half = sqrtm_oracle(b.covariance)
    inner = sqrtm_oracle(sb_half @ e.covariance @ sb_half)
    diff = b.mean - e.mean
    return float(diff @ diff + np.trace(b.covariance + e.covariance - 2 * inner))


def random_psd(rng, dim):
    a = rng.standard_normal((dim, dim + 2))
    return a @ a.T / (dim + 2)


class TestLsd:
    def test_identity(self, piano_clip):
        y = AudioBuffer(piano_clip.samples[: 3 * SR], SR)
        assert lsd(y, y) == 0.0

    def test_factor_ten_scale_law(self):
        # broadband noise keeps every STFT bin clear of the magnitude floor
        y = AudioBuffer(np.random.default_rng(0).standard_normal(2 * SR) * 0.3, SR)
        yhat = AudioBuffer(10 * y.samples, SR)
        assert abs(lsd(y, yhat) - 2.0) < 1e-6

    def test_sqrt_ten_scale_law(self):
        y = AudioBuffer(np.random.default_rng(1).standard_normal(2 * SR) * 0.3, SR)
        yhat = AudioBuffer(10**0.5 * y.samples, SR)
        assert abs(lsd(y, yhat) - 1.0) < 1e-6

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            lsd(AudioBuffer(np.zeros(4096), SR), AudioBuffer(np.zeros(5000), SR))


class TestEmbeddingProvider:
    def test_distance_zero_on_identity(self, piano_clip):
        p = SurrogateEmbeddingProvider(seed=0)
        y = resample(AudioBuffer(piano_clip.samples[: 2 * SR], SR), p.sample_rate)
        assert embedding_distance(y, y, p) == 0.0

    def test_symmetry(self, piano_clip):
        p = SurrogateEmbeddingProvider(seed=0)
        y = resample(AudioBuffer(piano_clip.samples[: 2 * SR], SR), p.sample_rate)
        z = resample(AudioBuffer(piano_clip.samples[2 * SR : 4 * SR], SR), p.sample_rate)
        assert embedding_distance(y, z, p) == embedding_distance(z, y, p)

    def test_known_tones_match_standalone_pipeline(self):
        # recompute the surrogate pipeline end to end, independently
        p = SurrogateEmbeddingProvider(seed=11)
        t = np.arange(16000) / 16000
        tone_a = AudioBuffer(0.5 * np.sin(2 * np.pi * 440 * t), 16000)
        tone_b = AudioBuffer(0.5 * np.sin(2 * np.pi * 1000 * t), 16000)

        from bwext.metrics import _mel_filterbank, _stft_magnitude

        def standalone_embed(buf):
            mags = _stft_magnitude(buf.samples, 1024, 256)
            mel = _mel_filterbank(64, 1024, 16000) @ (mags**2)
            logmel = np.log(np.maximum(mel, 1e-10))
            stats = np.concatenate([logmel.mean(axis=1), logmel.std(axis=1)])
            rng = np.random.default_rng(11)
            proj = rng.standard_normal((32, 128)) / np.sqrt(128)
            return proj @ stats

        expected = np.linalg.norm(standalone_embed(tone_a) - standalone_embed(tone_b))
        got = embedding_distance(tone_a, tone_b, p)
        assert abs(got - expected) < 1e-9

    def test_wrong_rate_rejected(self):
        p = SurrogateEmbeddingProvider()
        with pytest.raises(ProviderError):
            p.embed(AudioBuffer(np.zeros(22050), 22050))

    def test_deterministic(self, piano_clip):
        p1, p2 = SurrogateEmbeddingProvider(seed=3), SurrogateEmbeddingProvider(seed=3)
        y = resample(AudioBuffer(piano_clip.samples[:SR], SR), 16000)
        np.testing.assert_array_equal(p1.embed(y), p2.embed(y))


class TestFitGaussian:
    def test_identical_vectors(self):
        v = np.array([1.0, -2.0, 3.0])
        stats = fit_gaussian([v, v, v, v])
        np.testing.assert_allclose(stats.mean, v)
        np.testing.assert_allclose(stats.covariance, 0.0, atol=1e-12)

    def test_hand_computed_covariance(self):
        pts = [np.array([0.0, 0.0]), np.array([2.0, 0.0]), np.array([0.0, 2.0]), np.array([2.0, 2.0])]
        stats = fit_gaussian(pts)
        np.testing.assert_allclose(stats.mean, [1.0, 1.0])
        np.testing.assert_allclose(stats.covariance, np.diag([4.0 / 3.0, 4.0 / 3.0]))

    def test_order_invariance(self):
        rng = np.random.default_rng(0)
        pts = list(rng.standard_normal((20, 4)))
        a = fit_gaussian(pts)
        b = fit_gaussian(pts[::-1])
        np.testing.assert_allclose(a.mean, b.mean)
        np.testing.assert_allclose(a.covariance, b.covariance)

    def test_too_few_rejected(self):
        with pytest.raises(ValueError):
            fit_gaussian([np.zeros(3)])


class TestFrechetDistance:
    def test_identical_stats_zero(self):
        rng = np.random.default_rng(1)
        cov = random_psd(rng, 5)
        stats = GaussianStats(rng.standard_normal(5), cov)
        assert abs(frechet_distance(stats, stats)) < 1e-9

    def test_1d_closed_form(self):
        b = GaussianStats(np.array([0.0]), np.array([[1.0]]))
        e = GaussianStats(np.array([1.0]), np.array([[4.0]]))
        assert abs(frechet_distance(b, e) - 2.0) < 1e-9

    def test_2d_diagonal_closed_form(self):
        b = GaussianStats(np.zeros(2), np.eye(2))
        e = GaussianStats(np.array([3.0, 4.0]), np.eye(2))
        assert abs(frechet_distance(b, e) - 25.0) < 1e-9

    def test_dimension_mismatch_rejected(self):
        b = GaussianStats(np.zeros(2), np.eye(2))
        e = GaussianStats(np.zeros(3), np.eye(3))
        with pytest.raises(ValueError):
            frechet_distance(b, e)

    def test_against_eigendecomposition_oracle(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            dim = int(rng.integers(1, 9))
            b = GaussianStats(rng.standard_normal(dim), random_psd(rng, dim))
            e = GaussianStats(rng.standard_normal(dim), random_psd(rng, dim))
            assert abs(frechet_distance(b, e) - frechet_oracle(b, e)) < 1e-8

    def test_nonnegative(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            dim = int(rng.integers(1, 6))
            b = GaussianStats(rng.standard_normal(dim), random_psd(rng, dim))
            e = GaussianStats(rng.standard_normal(dim), random_psd(rng, dim))
            assert frechet_distance(b, e) >= 0.0


class TestFadProtocol:
    def test_same_corpus_zero(self, piano_corpus_2min):
        p = SurrogateEmbeddingProvider(seed=0)
        corpus = piano_corpus_2min[:2]
        assert abs(fad_protocol(corpus, corpus, p)) < 1e-8

    def test_noise_corruption_increases_distance(self, piano_corpus_2min):
        p = SurrogateEmbeddingProvider(seed=0)
        clean_a = piano_corpus_2min[:2]
        clean_b = piano_corpus_2min[2:4]
        rng = np.random.default_rng(9)
        noisy_b = [
            AudioBuffer(b.samples + rng.normal(0, 10 ** (-10 / 20), len(b)), SR) for b in clean_b
        ]
        baseline = fad_protocol(clean_a, clean_b, p)
        corrupted = fad_protocol(clean_a, noisy_b, p)
        assert corrupted > baseline

    def test_symmetry_with_identical_windowing(self, piano_corpus_2min):
        p = SurrogateEmbeddingProvider(seed=0)
        a, b = piano_corpus_2min[:2], piano_corpus_2min[2:4]
        assert abs(fad_protocol(a, b, p) - fad_protocol(b, a, p)) < 1e-8

    def test_empty_corpus_rejected(self):
        p = SurrogateEmbeddingProvider(seed=0)
        with pytest.raises(ValueError):
            fad_protocol([], [AudioBuffer(np.zeros(SR), SR)], p)
