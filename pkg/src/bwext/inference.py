"""End-user restoration pipeline: optional external denoiser, resampling,
optional noise injection, and chunked generator processing."""

from __future__ import annotations

import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .audio import AudioBuffer, load_audio, save_audio
from .degradation import NoiseSpec, add_noise
from .generator import Generator, load_generator
from .trainer import generator_process

SAMPLE_RATE = 22050


@dataclass(frozen=True)
class PipelineConfig:
    checkpoint_path: str
    denoiser_command: str | None = None
    chunk_seconds: float = 5.0
    overlap_seconds: float = 0.5
    inference_noise: NoiseSpec | None = None
    seed: int = 0

    def __post_init__(self):
        if not self.chunk_seconds > 2 * self.overlap_seconds >= 0:
            raise ValueError("need chunk_seconds > 2 * overlap_seconds >= 0")


def run_denoiser(command: str, input_path, output_path) -> None:
    """Invoke the external denoiser, file in, file out."""
    argv = shlex.split(command) + [str(input_path), str(output_path)]
    result = subprocess.run(argv, capture_output=True, text=True)
    if result.returncode != 0:
        raise RuntimeError(
            f"denoiser command failed with status {result.returncode}: {result.stderr.strip()}"
        )


def process_buffer(generator: Generator, x: AudioBuffer, cfg: PipelineConfig) -> AudioBuffer:
    """Bandwidth-extend one buffer, chunked with linear crossfades."""
    samples = x.samples
    if cfg.inference_noise is not None and cfg.inference_noise.enabled:
        rng = np.random.default_rng(cfg.seed)
        samples = add_noise(AudioBuffer(samples, x.sample_rate), cfg.inference_noise, rng).samples

    chunk = int(round(cfg.chunk_seconds * x.sample_rate))
    overlap = int(round(cfg.overlap_seconds * x.sample_rate))
    hop = chunk - overlap

    def run(seg: np.ndarray) -> np.ndarray:
        with torch.no_grad():
            t = torch.as_tensor(seg, dtype=torch.float32).unsqueeze(0)
            return generator_process(generator, t).squeeze(0).numpy().astype(np.float64)

    n = len(samples)
    if n <= chunk:
        return AudioBuffer(run(samples)[:n], x.sample_rate)

    out = np.zeros(n)
    weight = np.zeros(n)
    start = 0
    while start < n:
        seg = samples[start : start + chunk]
        processed = run(seg)
        w = np.ones(len(seg))
        if start > 0:
            ramp = min(overlap, len(seg))
            w[:ramp] = np.linspace(0.0, 1.0, ramp, endpoint=False)
        if start + chunk < n:
            w[-overlap:] = np.linspace(1.0, 0.0, overlap, endpoint=False)
        out[start : start + len(seg)] += processed * w
        weight[start : start + len(seg)] += w
        if start + chunk >= n:
            break
        start += hop
    out = out / np.maximum(weight, 1e-12)
    return AudioBuffer(out, x.sample_rate)


def run_inference(input_path, output_path, cfg: PipelineConfig) -> AudioBuffer:
    """Fig.-1-style restoration: denoise (optional), resample, extend, write."""
    input_path = Path(input_path)
    if cfg.denoiser_command:
        with tempfile.TemporaryDirectory() as tmp:
            denoised = Path(tmp) / "denoised.wav"
            run_denoiser(cfg.denoiser_command, input_path, denoised)
            x = load_audio(denoised, SAMPLE_RATE)
    else:
        x = load_audio(input_path, SAMPLE_RATE)

    generator = load_generator(cfg.checkpoint_path)
    generator.eval()
    y = process_buffer(generator, x, cfg)
    save_audio(output_path, y)
    return y
