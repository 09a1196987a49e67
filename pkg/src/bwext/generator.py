"""Spectrogram-domain U-Net generator with residual dense blocks."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass

import torch
import torch.nn as nn

from .spectral import N_BINS


@dataclass(frozen=True)
class GeneratorConfig:
    depth: int = 4
    base_channels: int = 32
    dense_block_layers: int = 3
    growth_rate: int = 16
    freq_embedding_dims: int = 8
    num_bins: int = N_BINS

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if self.num_bins < 1:
            raise ValueError("num_bins must be positive")
        if self.base_channels < 2:
            raise ValueError("base_channels must be >= 2")
        if min(self.dense_block_layers, self.growth_rate, self.freq_embedding_dims) < 1:
            raise ValueError("all generator config counts must be positive")

    def fingerprint(self) -> str:
        payload = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


class DenseBlock(nn.Module):
    """Densely connected 3x3 convolutions with a residual 1x1 projection."""

    def __init__(self, channels, num_layers, growth):
        super().__init__()
        self.layers = nn.ModuleList(
            nn.Conv2d(channels + i * growth, growth, 3, padding=1) for i in range(num_layers)
        )
        self.project = nn.Conv2d(channels + num_layers * growth, channels, 1)
        self.act = nn.ELU()

    def forward(self, x):
        feats = x
        for layer in self.layers:
            feats = torch.cat([feats, self.act(layer(feats))], dim=1)
        return x + self.project(feats)


def frequency_embedding(num_dims, num_bins, dtype, device):
    """Fixed sinusoidal encoding of the frequency-bin index, (E, F, 1)."""
    bins = torch.arange(num_bins, dtype=dtype, device=device) / max(num_bins - 1, 1)
    channels = []
    for k in range(num_dims):
        freq = torch.pi * 2.0 ** (k // 2)
        channels.append(torch.sin(bins * freq) if k % 2 == 0 else torch.cos(bins * freq))
    return torch.stack(channels).unsqueeze(-1)


class Generator(nn.Module):
    """U-Net over (2, F, T) real/imaginary spectrogram stacks.

    The frequency and time axes are zero-padded up to a multiple of
    2**depth internally and cropped back on exit, so the output shape
    always equals the input shape.
    """

    def __init__(self, cfg: GeneratorConfig = GeneratorConfig()):
        super().__init__()
        self.cfg = cfg
        c = cfg.base_channels
        widths = [c * 2**i for i in range(cfg.depth + 1)]
        self.stem = nn.Conv2d(2 + cfg.freq_embedding_dims, widths[0], 3, padding=1)
        self.enc_blocks = nn.ModuleList(
            DenseBlock(widths[i], cfg.dense_block_layers, cfg.growth_rate)
            for i in range(cfg.depth)
        )
        self.downs = nn.ModuleList(
            nn.Conv2d(widths[i], widths[i + 1], 4, stride=2, padding=1)
            for i in range(cfg.depth)
        )
        self.bottleneck = DenseBlock(widths[-1], cfg.dense_block_layers, cfg.growth_rate)
        self.ups = nn.ModuleList(
            nn.ConvTranspose2d(widths[i + 1], widths[i], 4, stride=2, padding=1)
            for i in reversed(range(cfg.depth))
        )
        self.fuses = nn.ModuleList(
            nn.Conv2d(2 * widths[i], widths[i], 3, padding=1) for i in reversed(range(cfg.depth))
        )
        self.dec_blocks = nn.ModuleList(
            DenseBlock(widths[i], cfg.dense_block_layers, cfg.growth_rate)
            for i in reversed(range(cfg.depth))
        )
        self.head = nn.Conv2d(widths[0], 2, 1)
        nn.init.zeros_(self.head.weight)
        nn.init.zeros_(self.head.bias)
        self.act = nn.ELU()

    def forward(self, x):
        if x.dim() == 3:
            return self.forward(x.unsqueeze(0)).squeeze(0)
        expected = self.cfg.num_bins
        if x.shape[1] != 2 or x.shape[2] != expected:
            raise ValueError(f"expected (batch, 2, {expected}, frames) input, got {tuple(x.shape)}")
        _, _, f, t = x.shape
        mult = 2**self.cfg.depth
        pad_f, pad_t = -f % mult, -t % mult
        h = torch.nn.functional.pad(x, (0, pad_t, 0, pad_f))

        emb = frequency_embedding(self.cfg.freq_embedding_dims, f + pad_f, h.dtype, h.device)
        h = torch.cat([h, emb.expand(-1, -1, t + pad_t).unsqueeze(0).expand(h.shape[0], -1, -1, -1)], dim=1)

        h = self.act(self.stem(h))
        skips = []
        for block, down in zip(self.enc_blocks, self.downs):
            h = block(h)
            skips.append(h)
            h = self.act(down(h))
        h = self.bottleneck(h)
        for up, fuse, block in zip(self.ups, self.fuses, self.dec_blocks):
            h = self.act(up(h))
            h = self.act(fuse(torch.cat([h, skips.pop()], dim=1)))
            h = block(h)
        out = self.head(h)
        return out[:, :, :f, :t]


def build_generator(cfg: GeneratorConfig, seed: int) -> Generator:
    """Deterministically initialized generator instance."""
    with torch.random.fork_rng():
        torch.manual_seed(seed)
        return Generator(cfg)


GENERATOR_CHECKPOINT_VERSION = 1


def save_generator(path, generator: Generator) -> None:
    """Versioned container of named parameter arrays plus config fingerprint."""
    torch.save(
        {
            "version": GENERATOR_CHECKPOINT_VERSION,
            "config": asdict(generator.cfg),
            "fingerprint": generator.cfg.fingerprint(),
            "state": generator.state_dict(),
        },
        path,
    )


def load_generator(path, expected_cfg: GeneratorConfig | None = None) -> Generator:
    from .errors import CheckpointError

    try:
        payload = torch.load(path, map_location="cpu", weights_only=False)
    except Exception as exc:
        raise CheckpointError(f"cannot read generator checkpoint {path}: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("version") != GENERATOR_CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported generator checkpoint in {path}")
    cfg = GeneratorConfig(**payload["config"])
    if cfg.fingerprint() != payload["fingerprint"]:
        raise CheckpointError("generator checkpoint fingerprint mismatch")
    if expected_cfg is not None and expected_cfg.fingerprint() != payload["fingerprint"]:
        raise CheckpointError("generator checkpoint does not match the requested config")
    generator = Generator(cfg)
    generator.load_state_dict(payload["state"])
    for name, p in generator.named_parameters():
        if not torch.all(torch.isfinite(p)):
            raise CheckpointError(f"non-finite parameter {name} in checkpoint")
    return generator
