"""Long-term average spectra, smoothed difference curves, and -3 dB cutoff
estimation for gauging the bandwidth of old recordings."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from .audio import AudioBuffer
from .errors import CutoffNotFoundError

WELCH_NFFT = 4096
RESCALE_BAND = (500.0, 2000.0)
CUTOFF_SEARCH_START = 2000.0
CUTOFF_THRESHOLD_DB = -3.0


@dataclass(frozen=True)
class LtasCurve:
    frequencies: np.ndarray
    levels: np.ndarray
    smoothing_fraction: float

    def __post_init__(self):
        freqs = np.asarray(self.frequencies, float)
        levels = np.asarray(self.levels, float)
        if freqs.shape != levels.shape or freqs.ndim != 1:
            raise ValueError("frequencies and levels must be equal-length vectors")
        if np.any(np.diff(freqs) <= 0):
            raise ValueError("frequencies must be strictly increasing")
        if not np.all(np.isfinite(levels)):
            raise ValueError("levels must be finite")
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "levels", levels)


def compute_ltas(x: AudioBuffer, smoothing_fraction: float = 1.0 / 3.0) -> LtasCurve:
    """Welch spectrum in dB with Gaussian smoothing over log-frequency.

    The smoothing standard deviation is smoothing_fraction octaves.
    """
    if len(x.samples) < WELCH_NFFT:
        raise ValueError(f"need at least {WELCH_NFFT} samples")
    freqs, psd = sps.welch(
        x.samples, fs=x.sample_rate, window="hann", nperseg=WELCH_NFFT, noverlap=WELCH_NFFT // 2
    )
    freqs, psd = freqs[1:], psd[1:]  # drop DC for the log-frequency grid
    levels_db = 10.0 * np.log10(np.maximum(psd, 1e-30))
    smoothed = _gaussian_smooth_log_freq(freqs, levels_db, smoothing_fraction)
    return LtasCurve(freqs, smoothed, smoothing_fraction)


def _gaussian_smooth_log_freq(freqs, levels_db, sigma_octaves):
    if sigma_octaves <= 0:
        return levels_db.copy()
    log_f = np.log2(freqs)
    out = np.empty_like(levels_db)
    for i, lf in enumerate(log_f):
        w = np.exp(-0.5 * ((log_f - lf) / sigma_octaves) ** 2)
        out[i] = np.sum(w * levels_db) / np.sum(w)
    return out


def difference_curve(old: LtasCurve, modern: LtasCurve) -> LtasCurve:
    """Level difference rescaled so the mean over 500 Hz-2 kHz is 0 dB."""
    if old.frequencies.shape != modern.frequencies.shape or not np.allclose(
        old.frequencies, modern.frequencies
    ):
        raise ValueError("curves must share a frequency grid")
    diff = old.levels - modern.levels
    band = (old.frequencies >= RESCALE_BAND[0]) & (old.frequencies <= RESCALE_BAND[1])
    if not np.any(band):
        raise ValueError("frequency grid does not cover the rescaling band")
    diff = diff - diff[band].mean()
    return LtasCurve(old.frequencies, diff, old.smoothing_fraction)


def average_curves(curves) -> LtasCurve:
    """Arithmetic mean of difference curves sharing a grid."""
    curves = list(curves)
    levels = np.mean([c.levels for c in curves], axis=0)
    return LtasCurve(curves[0].frequencies, levels, curves[0].smoothing_fraction)


def estimate_cutoff(curve: LtasCurve) -> float:
    """Lowest frequency above 2 kHz where the curve first crosses -3 dB."""
    freqs, levels = curve.frequencies, curve.levels
    sel = freqs > CUTOFF_SEARCH_START
    idx = np.flatnonzero(sel)
    for j in idx:
        if levels[j] <= CUTOFF_THRESHOLD_DB:
            if j == 0 or levels[j - 1] <= CUTOFF_THRESHOLD_DB:
                return float(freqs[j])
            f0, f1 = freqs[j - 1], freqs[j]
            l0, l1 = levels[j - 1], levels[j]
            return float(f0 + (CUTOFF_THRESHOLD_DB - l0) * (f1 - f0) / (l1 - l0))
    raise CutoffNotFoundError("curve never crosses -3 dB above 2 kHz")


def export_curve_csv(path, curve: LtasCurve) -> None:
    with open(path, "w") as f:
        f.write("frequency_hz,level_db\n")
        for fr, lv in zip(curve.frequencies, curve.levels):
            f.write(f"{fr:.4f},{lv:.6f}\n")
