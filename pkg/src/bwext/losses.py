"""Training objectives: LSGAN terms, multi-resolution STFT loss, composite."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from .audio import AudioBuffer

LOG_FLOOR = 1e-5


@dataclass(frozen=True)
class LossWeights:
    alpha: float = 0.4
    stft_resolutions: tuple[int, ...] = (256, 512, 1024, 2048)

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if not self.stft_resolutions:
            raise ValueError("at least one STFT resolution is required")


def _check_finite(*values):
    for v in values:
        if not np.all(np.isfinite(np.asarray(v, dtype=float))):
            raise ValueError("loss inputs must be finite")


def adversarial_g_loss(score_means) -> float:
    """LSGAN generator objective: sum of (score - 1)^2 over the scales."""
    _check_finite(score_means)
    return float(sum((s - 1.0) ** 2 for s in score_means))


def discriminator_loss(real_mean: float, fake_mean: float) -> float:
    """Per-discriminator LSGAN objective."""
    _check_finite(real_mean, fake_mean)
    return 0.5 * (real_mean - 1.0) ** 2 + 0.5 * fake_mean**2


def generator_total_loss(l_adv: float, l_rec: float, w: LossWeights = LossWeights()) -> float:
    _check_finite(l_adv, l_rec)
    return l_adv + w.alpha * l_rec


def spectral_convergence(y_mag: np.ndarray, yhat_mag: np.ndarray) -> float:
    """Frobenius-relative magnitude error."""
    y_mag, yhat_mag = np.asarray(y_mag, float), np.asarray(yhat_mag, float)
    if y_mag.shape != yhat_mag.shape:
        raise ValueError("magnitude matrices must share a shape")
    ref = np.linalg.norm(y_mag)
    if ref == 0:
        raise ValueError("reference magnitude norm is zero")
    return float(np.linalg.norm(y_mag - yhat_mag) / ref)


def log_magnitude_distance(y_mag: np.ndarray, yhat_mag: np.ndarray) -> float:
    """Mean absolute natural-log magnitude difference, floored at 1e-5."""
    y_mag, yhat_mag = np.asarray(y_mag, float), np.asarray(yhat_mag, float)
    if y_mag.shape != yhat_mag.shape:
        raise ValueError("magnitude matrices must share a shape")
    diff = np.log(np.maximum(y_mag, LOG_FLOOR)) - np.log(np.maximum(yhat_mag, LOG_FLOOR))
    return float(np.mean(np.abs(diff)))


def _stft_magnitude_torch(x: torch.Tensor, window_len: int) -> torch.Tensor:
    """Centered Hann STFT magnitude used by the reconstruction loss."""
    if x.shape[-1] < window_len:
        raise ValueError("signal shorter than the analysis window")
    window = torch.hann_window(window_len, periodic=True, dtype=x.dtype, device=x.device)
    spec = torch.stft(
        x,
        n_fft=window_len,
        hop_length=window_len // 4,
        window=window,
        center=True,
        pad_mode="reflect",
        return_complex=True,
    )
    return spec.abs()


def multires_stft_loss_torch(y: torch.Tensor, yhat: torch.Tensor, w: LossWeights = LossWeights()) -> torch.Tensor:
    """Differentiable multi-resolution STFT loss on (B, N) or (N,) tensors."""
    if y.shape != yhat.shape:
        raise ValueError("signals must have equal lengths")
    if y.dim() == 1:
        y, yhat = y.unsqueeze(0), yhat.unsqueeze(0)
    total = y.new_zeros(())
    for m in w.stft_resolutions:
        y_mag = _stft_magnitude_torch(y, m)
        yhat_mag = _stft_magnitude_torch(yhat, m)
        sc = torch.linalg.norm(y_mag - yhat_mag) / torch.linalg.norm(y_mag)
        mag = (y_mag.clamp_min(LOG_FLOOR).log() - yhat_mag.clamp_min(LOG_FLOOR).log()).abs().mean()
        total = total + sc + mag
    return total / len(w.stft_resolutions)


def multires_stft_loss(y: AudioBuffer, yhat: AudioBuffer, w: LossWeights = LossWeights()) -> float:
    if len(y) != len(yhat):
        raise ValueError("signals must have equal lengths")
    ty = torch.as_tensor(y.samples, dtype=torch.float64)
    tyhat = torch.as_tensor(yhat.samples, dtype=torch.float64)
    return float(multires_stft_loss_torch(ty, tyhat, w))


def lsgan_g_loss_torch(score_means: list[torch.Tensor]) -> torch.Tensor:
    total = score_means[0].new_zeros(())
    for s in score_means:
        total = total + (s - 1.0) ** 2
    return total


def lsgan_d_loss_torch(real_mean: torch.Tensor, fake_mean: torch.Tensor) -> torch.Tensor:
    return 0.5 * (real_mean - 1.0) ** 2 + 0.5 * fake_mean**2
