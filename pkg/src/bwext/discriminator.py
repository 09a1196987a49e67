"""Multi-scale time-domain discriminators judging waveform realness."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn
from torch.nn.utils.parametrizations import weight_norm

NUM_SCALES = 3
POOL_KERNEL = 4
POOL_STRIDE = 2


@dataclass(frozen=True)
class DiscriminatorConfig:
    layers_per_disc: int = 7
    base_channels: int = 16
    group_size: int = 4
    max_channels: int = 512

    def __post_init__(self):
        if min(self.layers_per_disc, self.base_channels, self.group_size) < 1:
            raise ValueError("discriminator config counts must be positive")


def multiscale_views(x: np.ndarray) -> list[np.ndarray]:
    """The 1x, 1/2x, 1/4x pooled views fed to the three discriminators."""
    x = np.asarray(x, dtype=np.float64)
    if len(x) < 16:
        raise ValueError("input too short for multi-scale pooling")
    views = [x]
    for _ in range(NUM_SCALES - 1):
        views.append(_avg_pool(views[-1]))
    return views


def _avg_pool(x: np.ndarray) -> np.ndarray:
    # kernel 4, stride 2, padding 1; padded positions excluded from the mean
    padded = np.concatenate([[0.0], x, [0.0]])
    counts = np.concatenate([[0.0], np.ones(len(x)), [0.0]])
    num_out = (len(x) + 2 - POOL_KERNEL) // POOL_STRIDE + 1
    out = np.empty(num_out)
    for i in range(num_out):
        seg = padded[i * POOL_STRIDE : i * POOL_STRIDE + POOL_KERNEL]
        cnt = counts[i * POOL_STRIDE : i * POOL_STRIDE + POOL_KERNEL].sum()
        out[i] = seg.sum() / cnt
    return out


def multiscale_views_torch(x: torch.Tensor) -> list[torch.Tensor]:
    """Batched (B, N) equivalent of multiscale_views."""
    if x.shape[-1] < 16:
        raise ValueError("input too short for multi-scale pooling")
    pool = nn.AvgPool1d(POOL_KERNEL, stride=POOL_STRIDE, padding=1, count_include_pad=False)
    views = [x]
    for _ in range(NUM_SCALES - 1):
        views.append(pool(views[-1].unsqueeze(1)).squeeze(1))
    return views


def pooling_cascade_response(num_passes: int, freqs_hz: np.ndarray, sample_rate: int) -> np.ndarray:
    """Magnitude response of repeated kernel-4 average pooling at its input rate."""
    response = np.ones(len(freqs_hz), dtype=complex)
    rate = float(sample_rate)
    for _ in range(num_passes):
        w = 2.0 * np.pi * np.asarray(freqs_hz) / rate
        kernel = np.full(POOL_KERNEL, 1.0 / POOL_KERNEL)
        response = response * (np.exp(-1j * np.outer(w, np.arange(POOL_KERNEL))) @ kernel)
        rate /= POOL_STRIDE
    return np.abs(response)


class ScaleDiscriminator(nn.Module):
    """MelGAN-shaped stack of grouped strided 1-D convolutions, weight-normalized."""

    def __init__(self, cfg: DiscriminatorConfig = DiscriminatorConfig()):
        super().__init__()
        layers = [weight_norm(nn.Conv1d(1, cfg.base_channels, 15, padding=7))]
        ch = cfg.base_channels
        for i in range(cfg.layers_per_disc - 3):
            out_ch = min(ch * 4, cfg.max_channels)
            groups = max(1, min(ch // cfg.group_size, out_ch))
            layers.append(weight_norm(nn.Conv1d(ch, out_ch, 41, stride=4, padding=20, groups=groups)))
            ch = out_ch
        layers.append(weight_norm(nn.Conv1d(ch, ch, 5, padding=2)))
        self.convs = nn.ModuleList(layers)
        self.post = weight_norm(nn.Conv1d(ch, 1, 3, padding=1))
        self.act = nn.LeakyReLU(0.2)

    def forward(self, view):
        if view.dim() == 1:
            view = view.unsqueeze(0)
        h = view.unsqueeze(1)
        if h.shape[-1] < self.receptive_stride():
            raise ValueError("input shorter than the discriminator stride product")
        for conv in self.convs:
            h = self.act(conv(h))
        return self.post(h).squeeze(1)

    def receptive_stride(self):
        s = 1
        for conv in self.convs:
            s *= conv.stride[0]
        return s


class DiscriminatorEnsemble(nn.Module):
    """Three scale discriminators plus the pooling that feeds them."""

    def __init__(self, cfg: DiscriminatorConfig = DiscriminatorConfig()):
        super().__init__()
        self.cfg = cfg
        self.discriminators = nn.ModuleList(ScaleDiscriminator(cfg) for _ in range(NUM_SCALES))

    def forward(self, x: torch.Tensor) -> list[torch.Tensor]:
        views = multiscale_views_torch(x)
        return [d(v) for d, v in zip(self.discriminators, views)]

    def score_means(self, x: torch.Tensor) -> list[torch.Tensor]:
        """Per-scale scalar scores: the arithmetic mean over each score map."""
        return [m.mean() for m in self.forward(x)]


def build_discriminators(cfg: DiscriminatorConfig, seed: int) -> DiscriminatorEnsemble:
    with torch.random.fork_rng():
        torch.manual_seed(seed)
        return DiscriminatorEnsemble(cfg)
