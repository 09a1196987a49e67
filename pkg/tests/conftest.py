import numpy as np
import pytest

from bwext.audio import AudioBuffer

SR = 22050


def synth_piano(duration_s, seed=0, sample_rate=SR):
    """Synthetic piano-like material: decaying harmonic notes with onsets.

    Broadband (harmonics up to Nyquist), transient-rich, deterministic. Each
    onset also carries a short bright hammer-strike noise burst (4.5-7 kHz)
    so the material has genuine treble content well above typical lowpass
    cutoffs.
    """
    from scipy.signal import butter, sosfilt

    rng = np.random.default_rng(seed)
    n = int(duration_s * sample_rate)
    out = np.zeros(n)
    t_axis = np.arange(n) / sample_rate
    hammer_sos = butter(4, [4500, 7000], btype="bandpass", fs=sample_rate, output="sos")
    midi_notes = rng.integers(40, 88, size=max(2, int(duration_s * 2)))
    onsets = np.sort(rng.uniform(0, max(duration_s - 0.5, 0.1), size=len(midi_notes)))
    for midi, onset in zip(midi_notes, onsets):
        f0 = 440.0 * 2 ** ((midi - 69) / 12)
        start = int(onset * sample_rate)
        seg_t = t_axis[: n - start]
        note = np.zeros(n - start)
        h = 1
        while f0 * h < sample_rate / 2:
            amp = 0.5 / h**0.8
            decay = np.exp(-seg_t * (1.5 + 0.4 * h))
            note += amp * decay * np.sin(2 * np.pi * f0 * h * seg_t + rng.uniform(0, 2 * np.pi))
            h += 1
        strike_len = min(int(0.08 * sample_rate), n - start)
        strike = sosfilt(hammer_sos, rng.standard_normal(strike_len))
        note[:strike_len] += 3.0 * strike * np.exp(-seg_t[:strike_len] * 25.0)
        out[start:] += note * rng.uniform(0.3, 0.8)
    peak = np.max(np.abs(out))
    if peak > 0:
        out = 0.5 * out / peak
    return AudioBuffer(out, sample_rate)


@pytest.fixture(scope="session")
def piano_clip():
    return synth_piano(6.0, seed=7)


@pytest.fixture(scope="session")
def piano_corpus_2min():
    return [synth_piano(24.0, seed=s) for s in range(5)]
