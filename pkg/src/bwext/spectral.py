"""STFT/ISTFT front-end shared by training, inference, losses, and metrics.

Analysis convention: 1024-sample periodic Hamming window, hop 256,
center-reflection padding of 512 samples on both ends, T = ceil(L / 256)
frames, one-sided spectrum of 513 bins. Synthesis uses weighted overlap-add
with window-squared normalization, which makes istft(stft(x)) exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from .audio import AudioBuffer

FFT_SIZE = 1024
HOP = 256
N_BINS = FFT_SIZE // 2 + 1
PAD = FFT_SIZE // 2


def hamming_periodic(n: int) -> np.ndarray:
    """Periodic (DFT-even) Hamming window."""
    k = np.arange(n)
    return 0.54 - 0.46 * np.cos(2.0 * np.pi * k / n)


@dataclass(frozen=True)
class ComplexSpectrogram:
    """One-sided complex spectrogram stored as two real planes."""

    real_plane: np.ndarray
    imag_plane: np.ndarray
    fft_size: int
    hop: int
    sample_rate: int

    def __post_init__(self):
        r = np.asarray(self.real_plane, dtype=np.float64)
        i = np.asarray(self.imag_plane, dtype=np.float64)
        if r.shape != i.shape:
            raise ValueError("real and imaginary planes must share a shape")
        if r.shape[0] != self.fft_size // 2 + 1:
            raise ValueError("bin count must be fft_size/2 + 1")
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(i))):
            raise ValueError("spectrogram planes must be finite")
        object.__setattr__(self, "real_plane", r)
        object.__setattr__(self, "imag_plane", i)

    @property
    def num_bins(self) -> int:
        return self.real_plane.shape[0]

    @property
    def num_frames(self) -> int:
        return self.real_plane.shape[1]

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.real_plane, self.imag_plane)


def _reflect_pad(x: np.ndarray, pad: int) -> np.ndarray:
    """Reflect padding that tolerates signals shorter than the pad length."""
    if len(x) == 1:
        return np.full(len(x) + 2 * pad, x[0])
    left, right = x, x
    while len(left) - 1 < pad:
        left = np.concatenate([left, left[-2::-1]])
        right = np.concatenate([right[::-1][1:], right])
    return np.concatenate([left[1 : pad + 1][::-1], x, right[-pad - 1 : -1][::-1]])


def stft(x: AudioBuffer) -> ComplexSpectrogram:
    """Forward STFT with the package's fixed analysis parameters."""
    n = len(x.samples)
    if n < 1:
        raise ValueError("cannot transform an empty buffer")
    window = hamming_periodic(FFT_SIZE)
    padded = _reflect_pad(x.samples, PAD)
    num_frames = -(-n // HOP)
    frames = np.empty((num_frames, FFT_SIZE))
    for t in range(num_frames):
        frames[t] = padded[t * HOP : t * HOP + FFT_SIZE]
    spec = np.fft.rfft(frames * window, axis=1).T
    return ComplexSpectrogram(spec.real, spec.imag, FFT_SIZE, HOP, x.sample_rate)


def istft(spec: ComplexSpectrogram, length: int) -> AudioBuffer:
    """Inverse STFT via weighted overlap-add; output trimmed/padded to length."""
    if spec.fft_size != FFT_SIZE or spec.hop != HOP:
        raise ValueError("spectrogram was not produced with this module's parameters")
    window = hamming_periodic(FFT_SIZE)
    frames = np.fft.irfft(spec.real_plane.T + 1j * spec.imag_plane.T, n=FFT_SIZE, axis=1)
    num_frames = frames.shape[0]
    total = (num_frames - 1) * HOP + FFT_SIZE
    acc = np.zeros(total)
    norm = np.zeros(total)
    wsq = window**2
    for t in range(num_frames):
        acc[t * HOP : t * HOP + FFT_SIZE] += frames[t] * window
        norm[t * HOP : t * HOP + FFT_SIZE] += wsq
    acc = acc / np.maximum(norm, 1e-12)
    out = acc[PAD : PAD + length]
    if len(out) < length:
        out = np.pad(out, (0, length - len(out)))
    return AudioBuffer(out, spec.sample_rate)


# ---------------------------------------------------------------------------
# Differentiable torch twins used inside the training graph. They reproduce
# the numpy convention above exactly (same padding, framing, and WOLA).
# ---------------------------------------------------------------------------


def torch_window(dtype=torch.float32, device=None) -> torch.Tensor:
    return torch.as_tensor(hamming_periodic(FFT_SIZE), dtype=dtype, device=device)


def stft_torch(x: torch.Tensor) -> torch.Tensor:
    """Batched STFT, (B, N) -> (B, 2, 513, T) with real/imag channels."""
    if x.dim() != 2:
        raise ValueError("expected a (batch, samples) tensor")
    n = x.shape[1]
    num_frames = -(-n // HOP)
    padded = torch.nn.functional.pad(x.unsqueeze(1), (PAD, PAD), mode="reflect").squeeze(1)
    frames = padded.unfold(1, FFT_SIZE, HOP)[:, :num_frames]
    window = torch_window(x.dtype, x.device)
    spec = torch.fft.rfft(frames * window, dim=2)
    return torch.stack([spec.real, spec.imag], dim=1).transpose(2, 3)


def istft_torch(spec: torch.Tensor, length: int) -> torch.Tensor:
    """Batched inverse of stft_torch, (B, 2, 513, T) -> (B, length)."""
    if spec.dim() != 4 or spec.shape[1] != 2 or spec.shape[2] != N_BINS:
        raise ValueError("expected a (batch, 2, 513, frames) tensor")
    batch, _, _, num_frames = spec.shape
    window = torch_window(spec.dtype, spec.device)
    complex_spec = torch.complex(spec[:, 0], spec[:, 1]).transpose(1, 2)
    frames = torch.fft.irfft(complex_spec, n=FFT_SIZE, dim=2) * window

    total = (num_frames - 1) * HOP + FFT_SIZE
    idx = (
        torch.arange(num_frames, device=spec.device).unsqueeze(1) * HOP
        + torch.arange(FFT_SIZE, device=spec.device)
    ).reshape(-1)
    acc = torch.zeros(batch, total, dtype=spec.dtype, device=spec.device)
    acc = acc.index_add(1, idx, frames.reshape(batch, -1))
    norm = torch.zeros(total, dtype=spec.dtype, device=spec.device)
    norm = norm.index_add(0, idx, (window**2).repeat(num_frames))
    acc = acc / norm.clamp_min(1e-12)
    out = acc[:, PAD : PAD + length]
    if out.shape[1] < length:
        out = torch.nn.functional.pad(out, (0, length - out.shape[1]))
    return out
