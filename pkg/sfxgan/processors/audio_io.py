"""Load training layers and write synthesised audio."""

from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import soundfile as sf
from rich.console import Console

from sfxgan.core.errors import AudioFormatError, AudioWriteError
from sfxgan.core.models import AudioLayerSet

console = Console()

WAV_SUBTYPES = ("FLOAT", "PCM_16")


def read_wav(path: Path) -> Tuple[np.ndarray, int]:
    """
    Read a mono audio file.

    Args:
        path: WAV file (PCM 16/24-bit or float 32-bit)

    Returns:
        Tuple of (samples as float64, sample rate)

    Raises:
        AudioFormatError: If the file cannot be decoded or is not mono
    """
    path = Path(path)
    if not path.exists():
        raise AudioFormatError(f"Audio file not found: {path}")
    try:
        data, sample_rate = sf.read(str(path), dtype="float64", always_2d=True)
    except (RuntimeError, sf.SoundFileError) as e:
        raise AudioFormatError(f"Could not read audio file {path}: {e}") from e

    if data.shape[1] != 1:
        raise AudioFormatError(
            f"{path} has {data.shape[1]} channels; only mono layers are supported"
        )
    return data[:, 0], int(sample_rate)


def peak_normalize(samples: np.ndarray, label: str = "layer") -> np.ndarray:
    """Scale samples so the largest magnitude is exactly 1."""
    peak = float(np.max(np.abs(samples))) if samples.size else 0.0
    if peak == 0.0 or not np.isfinite(peak):
        raise AudioFormatError(f"{label} is silent or empty and cannot be normalised")
    return samples / peak


def load_layers(
    paths: Sequence[Path],
    pre_pad_ms: float = 0.0,
    names: Optional[Sequence[str]] = None,
    expected_sample_rate: Optional[int] = None,
) -> AudioLayerSet:
    """
    Load, peak-normalise and length-align the layers of one sound effect.

    Each layer is normalised to [-1, 1] on its own, gets `pre_pad_ms` of leading
    silence, and is then zero-padded at the end to the longest layer.

    Args:
        paths: One mono audio file per layer
        pre_pad_ms: Leading silence in milliseconds
        names: Layer labels (defaults to the file stems)
        expected_sample_rate: Reject files at any other rate

    Returns:
        Aligned AudioLayerSet

    Raises:
        AudioFormatError: Unreadable, non-mono or silent file, or mismatched rates
    """
    if not paths:
        raise AudioFormatError("At least one layer file is required")
    if pre_pad_ms < 0:
        raise AudioFormatError(f"pre_pad_ms must be >= 0, got {pre_pad_ms}")
    if names is not None and len(names) != len(paths):
        raise AudioFormatError(f"Got {len(names)} names for {len(paths)} layer files")

    raw: List[np.ndarray] = []
    sample_rate: Optional[int] = expected_sample_rate
    for path in paths:
        samples, rate = read_wav(Path(path))
        if sample_rate is None:
            sample_rate = rate
        elif rate != sample_rate:
            raise AudioFormatError(
                f"{path} is sampled at {rate} Hz but the layer set uses {sample_rate} Hz"
            )
        raw.append(peak_normalize(samples, label=str(path)))

    assert sample_rate is not None
    pre_pad = int(round(sample_rate * pre_pad_ms / 1000.0))
    padded = [np.concatenate([np.zeros(pre_pad), layer]) for layer in raw]
    length = max(layer.shape[0] for layer in padded)
    aligned = [np.pad(layer, (0, length - layer.shape[0])) for layer in padded]

    return AudioLayerSet(
        layers=aligned,
        names=list(names) if names is not None else [Path(p).stem for p in paths],
        sample_rate=sample_rate,
        pre_pad=pre_pad,
    )


def combine_layers(layer_set: AudioLayerSet, name: str = "mix") -> AudioLayerSet:
    """Sum all layers into one re-normalised layer (single-channel training)."""
    mixed = peak_normalize(layer_set.as_array().sum(axis=0), label="layer mixdown")
    return AudioLayerSet(
        layers=[mixed],
        names=[name],
        sample_rate=layer_set.sample_rate,
        pre_pad=layer_set.pre_pad,
    )


def write_wav(
    samples: np.ndarray,
    sample_rate: int,
    path: Path,
    subtype: str = "FLOAT",
) -> Path:
    """
    Write mono samples to a WAV file, clipping to [-1, 1].

    Args:
        samples: Mono samples
        sample_rate: Sample rate in Hz
        path: Output file
        subtype: "FLOAT" (32-bit float, default) or "PCM_16"

    Returns:
        The path written

    Raises:
        ValueError: If samples are not finite or the subtype is unsupported
        AudioWriteError: If the file cannot be written
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 1:
        raise ValueError(f"Expected mono samples, got shape {samples.shape}")
    if not np.all(np.isfinite(samples)):
        raise ValueError("Cannot write non-finite samples")
    if subtype not in WAV_SUBTYPES:
        raise ValueError(f"Unsupported WAV subtype {subtype!r}; use one of {WAV_SUBTYPES}")

    clipped = int(np.count_nonzero(np.abs(samples) > 1.0))
    if clipped:
        console.print(f"[yellow]⚠[/yellow] {clipped} samples clipped to [-1, 1] in {path}")
    samples = np.clip(samples, -1.0, 1.0)

    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        sf.write(str(path), samples.astype(np.float32), sample_rate, subtype=subtype)
    except (OSError, RuntimeError, sf.SoundFileError) as e:
        raise AudioWriteError(f"Could not write {path}: {e}") from e
    return path
