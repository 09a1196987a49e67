"""Training-time degradation: randomized Kaiser FIR lowpass, additive noise,
random gain, plus the fixed Butterworth filters used for evaluation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import signal as sps

from .audio import AudioBuffer

FIR_ORDER = 25
KAISER_BETA = 1.0
BUTTERWORTH_ORDER = 6


@dataclass(frozen=True)
class FilterSpec:
    family: str  # "fir-kaiser" or "iir-butterworth"
    cutoff_hz: float
    sample_rate: int
    order: int | None = None
    kaiser_beta: float = KAISER_BETA

    def __post_init__(self):
        if self.family not in ("fir-kaiser", "iir-butterworth"):
            raise ValueError(f"unknown filter family {self.family!r}")
        if self.order is None:
            default = FIR_ORDER if self.family == "fir-kaiser" else BUTTERWORTH_ORDER
            object.__setattr__(self, "order", default)
        if self.order < 1:
            raise ValueError("filter order must be >= 1")
        if not 0.0 < self.cutoff_hz < self.sample_rate / 2:
            raise ValueError("cutoff must lie strictly inside (0, Nyquist)")


@dataclass(frozen=True)
class CutoffDistribution:
    mean_hz: float = 3000.0
    std_hz: float = 300.0
    clamp_low_hz: float = 500.0
    clamp_high_hz: float = 10000.0

    def __post_init__(self):
        if not self.clamp_low_hz < self.mean_hz < self.clamp_high_hz:
            raise ValueError("mean cutoff must lie inside the clamp interval")
        if self.std_hz < 0:
            raise ValueError("std_hz must be nonnegative")


@dataclass(frozen=True)
class NoiseSpec:
    power_dbfs: float = -30.0
    enabled: bool = True

    def __post_init__(self):
        if self.power_dbfs > 0:
            raise ValueError("noise power must be <= 0 dBFS")

    @property
    def std(self) -> float:
        return 10.0 ** (self.power_dbfs / 20.0)


def sample_cutoff(dist: CutoffDistribution, rng: np.random.Generator) -> float:
    """Draw a cutoff from the clamped normal distribution."""
    draw = rng.normal(dist.mean_hz, dist.std_hz)
    return float(np.clip(draw, dist.clamp_low_hz, dist.clamp_high_hz))


def design_fir_lowpass(spec: FilterSpec) -> np.ndarray:
    """Windowed-sinc Kaiser lowpass; taps sum to 1 and -6 dB at the cutoff."""
    if spec.family != "fir-kaiser":
        raise ValueError("spec is not a Kaiser FIR filter")
    taps = sps.firwin(
        spec.order + 1,
        spec.cutoff_hz,
        window=("kaiser", spec.kaiser_beta),
        fs=spec.sample_rate,
    )
    return taps / taps.sum()


def design_butterworth_lowpass(spec: FilterSpec) -> np.ndarray:
    """Butterworth lowpass as second-order sections (bilinear, prewarped)."""
    if spec.family != "iir-butterworth":
        raise ValueError("spec is not a Butterworth filter")
    return sps.butter(spec.order, spec.cutoff_hz, btype="low", output="sos", fs=spec.sample_rate)


def fir_frequency_response(taps: np.ndarray, freqs_hz: np.ndarray, sample_rate: int) -> np.ndarray:
    """Complex DTFT of the taps on an arbitrary frequency grid."""
    w = 2.0 * np.pi * np.asarray(freqs_hz) / sample_rate
    n = np.arange(len(taps))
    return np.exp(-1j * np.outer(w, n)) @ taps


def sos_frequency_response(sos: np.ndarray, freqs_hz: np.ndarray, sample_rate: int) -> np.ndarray:
    _, h = sps.sosfreqz(sos, worN=np.asarray(freqs_hz, dtype=float), fs=sample_rate)
    return h


def apply_fir_zero_phase(x: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """Apply the FIR's amplitude response at zero phase (FFT overlap-free).

    The designed taps are symmetric, so H(w) = A(w) e^{-jw*order/2} with A
    real. Multiplying the spectrum by A alone removes the 12.5-sample group
    delay exactly, half sample included, keeping input/target pairs aligned.
    """
    n = len(x)
    nfft = int(2 ** np.ceil(np.log2(n + len(taps))))
    freqs = np.fft.rfftfreq(nfft)
    h = fir_frequency_response(taps, freqs, 1.0)
    amplitude = np.real(h * np.exp(1j * 2.0 * np.pi * freqs * (len(taps) - 1) / 2.0))
    y = np.fft.irfft(np.fft.rfft(x, nfft) * amplitude, nfft)
    return y[:n]


def apply_butterworth(x: AudioBuffer, spec: FilterSpec) -> AudioBuffer:
    """Causal sixth-order Butterworth filtering, as used on the test corpus."""
    sos = design_butterworth_lowpass(spec)
    return AudioBuffer(sps.sosfilt(sos, x.samples), x.sample_rate)


def add_noise(x: AudioBuffer, spec: NoiseSpec, rng: np.random.Generator) -> AudioBuffer:
    """Add zero-mean white Gaussian noise at the configured dBFS power."""
    if not spec.enabled:
        return x
    w = rng.normal(0.0, spec.std, size=len(x.samples))
    return AudioBuffer(x.samples + w, x.sample_rate)


@dataclass(frozen=True)
class DegradedExample:
    degraded: AudioBuffer
    target: AudioBuffer
    cutoff_hz: float
    gain_db: float


def degrade_example(
    y: AudioBuffer,
    dist: CutoffDistribution = CutoffDistribution(),
    noise: NoiseSpec = NoiseSpec(),
    gain_range_db: tuple[float, float] = (-6.0, 4.0),
    rng: np.random.Generator = None,
) -> DegradedExample:
    """Build one training pair: gain -> randomized lowpass -> additive noise.

    The gain scales both members of the pair, so the passband identity
    mapping stays learnable at any loudness.
    """
    if rng is None:
        rng = np.random.default_rng()
    gain_db = float(rng.uniform(*gain_range_db))
    scaled = y.samples * 10.0 ** (gain_db / 20.0)

    cutoff = sample_cutoff(dist, rng)
    taps = design_fir_lowpass(FilterSpec("fir-kaiser", cutoff, y.sample_rate))
    filtered = apply_fir_zero_phase(scaled, taps)

    degraded = add_noise(AudioBuffer(filtered, y.sample_rate), noise, rng)
    return DegradedExample(degraded, AudioBuffer(scaled, y.sample_rate), cutoff, gain_db)


def export_response_csv(path, spec: FilterSpec, num_points: int = 512) -> None:
    """Write (frequency_hz, magnitude_db) rows for plotting."""
    freqs = np.linspace(1.0, spec.sample_rate / 2 - 1.0, num_points)
    if spec.family == "fir-kaiser":
        h = fir_frequency_response(design_fir_lowpass(spec), freqs, spec.sample_rate)
    else:
        h = sos_frequency_response(design_butterworth_lowpass(spec), freqs, spec.sample_rate)
    mags_db = 20.0 * np.log10(np.maximum(np.abs(h), 1e-12))
    with open(path, "w") as f:
        f.write("frequency_hz,magnitude_db\n")
        for fr, m in zip(freqs, mags_db):
            f.write(f"{fr:.4f},{m:.6f}\n")
