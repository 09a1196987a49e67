"""Audio buffers, WAV I/O, resampling, and segmentation."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

from .errors import AudioFormatError


@dataclass(frozen=True)
class AudioBuffer:
    """Mono audio in [-1, 1] with an attached sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("AudioBuffer holds mono audio (1-D array)")
        if not np.all(np.isfinite(samples)):
            raise ValueError("AudioBuffer samples must be finite")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def rms(self) -> float:
        if len(self.samples) == 0:
            return 0.0
        return float(np.sqrt(np.mean(self.samples**2)))


def resample(x: AudioBuffer, target_rate: int) -> AudioBuffer:
    """Band-limited polyphase resampling; identity if rates already match."""
    if target_rate <= 0:
        raise ValueError("target_rate must be positive")
    if x.sample_rate == target_rate:
        return x
    from math import gcd

    g = gcd(x.sample_rate, target_rate)
    up, down = target_rate // g, x.sample_rate // g
    # Kaiser-windowed polyphase; beta 14 gives > 100 dB stopband attenuation.
    y = resample_poly(x.samples, up, down, window=("kaiser", 14.0))
    return AudioBuffer(y, target_rate)


def load_audio(path, target_rate: int) -> AudioBuffer:
    """Read a PCM WAV file, fold to mono, and resample to target_rate.

    Supports 16/24-bit integer and 32-bit float encodings. Stereo input is
    averaged to mono.
    """
    path = Path(path)
    try:
        rate, data = wavfile.read(path)
    except FileNotFoundError:
        raise
    except (ValueError, Exception) as exc:  # noqa: B014 - scipy raises bare ValueError
        if isinstance(exc, ValueError):
            raise AudioFormatError(f"cannot decode {path}: {exc}") from exc
        raise

    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.int32:
        # scipy widens 24-bit PCM to int32 with the low byte zeroed
        samples = data.astype(np.float64) / 2147483648.0
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
    else:
        raise AudioFormatError(f"unsupported WAV encoding {data.dtype} in {path}")

    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    elif samples.ndim != 1:
        raise AudioFormatError(f"unsupported channel layout in {path}")

    return resample(AudioBuffer(samples, int(rate)), target_rate)


def save_audio(path, x: AudioBuffer, bit_depth: int = 32) -> None:
    """Write a WAV file as 32-bit float (default) or 16-bit PCM."""
    if bit_depth == 32:
        wavfile.write(path, x.sample_rate, x.samples.astype(np.float32))
    elif bit_depth == 16:
        clipped = np.clip(x.samples, -1.0, 1.0)
        wavfile.write(path, x.sample_rate, (clipped * 32767.0).round().astype(np.int16))
    else:
        raise ValueError("bit_depth must be 16 or 32")


def segment(x: AudioBuffer, seconds: float) -> list[AudioBuffer]:
    """Split into non-overlapping segments of exactly seconds; remainder dropped."""
    if seconds <= 0:
        raise ValueError("segment length must be positive")
    n = int(round(seconds * x.sample_rate))
    count = len(x.samples) // n
    return [AudioBuffer(x.samples[i * n : (i + 1) * n], x.sample_rate) for i in range(count)]
