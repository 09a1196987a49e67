"""Bandwidth extension toolkit for bandlimited music recordings."""

from .audio import AudioBuffer, load_audio, resample, save_audio, segment
from .spectral import ComplexSpectrogram, istft, stft

__all__ = [
    "AudioBuffer",
    "ComplexSpectrogram",
    "istft",
    "load_audio",
    "resample",
    "save_audio",
    "segment",
    "stft",
]

__version__ = "0.1.0"
