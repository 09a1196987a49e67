"""Exception types shared across the package."""


class AudioFormatError(Exception):
    """A WAV file could not be decoded or uses an unsupported encoding."""


class CheckpointError(Exception):
    """A checkpoint file is corrupt, truncated, or from a mismatched config."""


class DivergenceError(Exception):
    """A training loss or parameter became non-finite."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class ProviderError(Exception):
    """An embedding provider failed to produce an embedding."""


class CutoffNotFoundError(Exception):
    """A difference curve never crosses the -3 dB threshold."""
