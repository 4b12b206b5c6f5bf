"""Exceptions raised by sfxgan."""

from pathlib import Path
from typing import Optional


class SfxGanError(Exception):
    """Base class for all sfxgan errors."""


class AudioFormatError(SfxGanError, ValueError):
    """An input audio file cannot be used as a training layer."""


class AudioWriteError(SfxGanError, OSError):
    """Synthesised audio could not be written to disk."""


class SpectrogramError(SfxGanError, ValueError):
    """Invalid spectrogram data or inconsistent STFT shapes."""


class PyramidError(SfxGanError, ValueError):
    """The requested pyramid schedule cannot be built."""


class ShapeMismatchError(SfxGanError, ValueError):
    """Tensor shapes disagree with the model or the pyramid."""


class CheckpointError(SfxGanError, ValueError):
    """A checkpoint directory is missing, incomplete or corrupt."""


class ManifestError(SfxGanError, ValueError):
    """An experiment manifest does not resolve to a valid run."""


class TrainingDivergedError(SfxGanError, RuntimeError):
    """A loss became non-finite during training."""

    def __init__(
        self,
        message: str,
        stage: int,
        iteration: int,
        checkpoint_path: Optional[Path] = None,
    ):
        super().__init__(message)
        self.stage = stage
        self.iteration = iteration
        self.checkpoint_path = checkpoint_path
