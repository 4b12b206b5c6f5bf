"""Data models for sound layers, spectrograms and generated variations."""

from typing import List, Optional, Tuple

import numpy as np
import torch
from pydantic import BaseModel, ConfigDict, Field, model_validator

from sfxgan.core.config import StftParams, SynthesisParams, TrainConfig


class AudioLayerSet(BaseModel):
    """Mono layers of one sound effect, all the same length and sample rate."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    layers: List[np.ndarray]
    names: List[str]
    sample_rate: int = Field(default=44100, gt=0)
    pre_pad: int = Field(default=0, ge=0, description="Leading zero samples added per layer")

    @model_validator(mode="after")
    def _check_alignment(self) -> "AudioLayerSet":
        if not self.layers:
            raise ValueError("An AudioLayerSet needs at least one layer")
        if len(self.names) != len(self.layers):
            raise ValueError(
                f"Got {len(self.names)} names for {len(self.layers)} layers"
            )
        lengths = {layer.shape for layer in self.layers}
        if len(lengths) != 1 or self.layers[0].ndim != 1:
            raise ValueError(f"Layers must be 1-D and equally long, got shapes {sorted(lengths)}")
        return self

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    @property
    def length(self) -> int:
        return int(self.layers[0].shape[0])

    @property
    def duration(self) -> float:
        return self.length / self.sample_rate

    def as_array(self) -> np.ndarray:
        """Stack the layers into a (layers, samples) array."""
        return np.stack(self.layers, axis=0)


class MultiChannelSpectrogram(BaseModel):
    """Normalised log-magnitude spectrogram with one channel per layer."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    data: torch.Tensor = Field(description="C x F x T normalised log-magnitude")
    norm_mean: float
    norm_std: float = Field(gt=0)
    stft: StftParams
    layer_names: List[str]
    sample_rate: int = Field(default=44100, gt=0)

    @model_validator(mode="after")
    def _check_shape(self) -> "MultiChannelSpectrogram":
        if self.data.dim() != 3:
            raise ValueError(f"Spectrogram data must be C x F x T, got {tuple(self.data.shape)}")
        if self.data.shape[1] != self.stft.num_bins:
            raise ValueError(
                f"Expected {self.stft.num_bins} frequency bins, got {self.data.shape[1]}"
            )
        if self.data.shape[0] != len(self.layer_names):
            raise ValueError("One layer name per channel is required")
        return self

    @property
    def num_channels(self) -> int:
        return int(self.data.shape[0])

    @property
    def num_frames(self) -> int:
        return int(self.data.shape[2])


class PyramidSpec(BaseModel):
    """Coarse-to-fine stage shapes of the training spectrogram."""

    num_stages: int = Field(default=10, ge=2)
    min_size: int = Field(ge=1)
    max_size: int = Field(ge=1)
    size_axis: str = "shorter"
    per_stage_shapes: List[Tuple[int, int]] = Field(default_factory=list)


class NoiseMapSet(BaseModel):
    """One noise tensor per active generator stage plus its amplitude."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    maps: List[torch.Tensor]
    amplitudes: List[float]

    @model_validator(mode="after")
    def _check_lengths(self) -> "NoiseMapSet":
        if len(self.maps) != len(self.amplitudes):
            raise ValueError("Each noise map needs exactly one amplitude")
        if not self.maps:
            raise ValueError("A NoiseMapSet needs at least the stage-0 map")
        return self

    @property
    def num_stages(self) -> int:
        return len(self.maps)

    def to(self, device: torch.device) -> "NoiseMapSet":
        return NoiseMapSet(maps=[m.to(device) for m in self.maps], amplitudes=self.amplitudes)


class LossRecord(BaseModel):
    """Losses logged for one training iteration."""

    iteration: int
    stage: int
    d_loss: float
    g_adv: float
    rec: float


class CheckpointManifest(BaseModel):
    """Human-readable description stored next to the checkpoint weight blobs."""

    format_version: int = 1
    train_config: TrainConfig
    stft: StftParams
    norm_mean: float
    norm_std: float
    sample_rate: int
    layer_names: List[str]
    pyramid_shapes: List[Tuple[int, int]]
    noise_amplitudes: List[float]
    completed_stages: int = Field(ge=0)
    num_discriminators: int = Field(ge=1, le=2)
    optimizer: str = "adam"
    seed: int


class SynthesizedVariation(BaseModel):
    """One generated mix together with the layers that were summed into it."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    index: int
    mix: np.ndarray
    per_layer: AudioLayerSet
    retarget_multiplier: float = Field(description="Time-axis multiplier of generated take `index`")
    num_frames: int = Field(description="Final-stage frames of generated take `index`")
    source_variations: List[int] = Field(description="Take each layer was taken from")
    layer_multipliers: List[float] = Field(description="Multiplier of each layer's source take")
    layer_num_frames: List[int] = Field(description="Frames of each layer's source take")
    delays_ms: List[float]
    gains_db: List[float]
    clipped_samples: int = 0
    seed: int = Field(description="Seed of generated take `index`")

    @property
    def duration(self) -> float:
        return self.mix.shape[0] / self.per_layer.sample_rate


class DiversityReport(BaseModel):
    """Pairwise log-spectrogram distances across a batch of mixes."""

    mean_distance: float
    min_distance: float
    max_distance: float
    durations: List[float]
    num_distinct_durations: int


def train_config_summary(cfg: TrainConfig) -> str:
    """One-line description of the knobs that differ between presets."""
    return (
        f"stages={cfg.num_stages} iters={cfg.iters_per_stage} filters={cfg.filters} "
        f"d2_dilation={cfg.d2_dilation} min_size={cfg.min_size}"
    )


class VariationRecord(BaseModel):
    """Manifest entry for one written mix."""

    index: int
    file: str
    layer_files: List[str] = Field(default_factory=list)
    seed: int
    retarget_multiplier: float
    num_frames: int
    duration: float
    source_variations: List[int]
    layer_multipliers: List[float]
    layer_num_frames: List[int]
    delays_ms: List[float]
    gains_db: List[float]
    clipped_samples: int


class SynthesisManifest(BaseModel):
    """Everything needed to reproduce a synthesis run."""

    schema_version: int = 1
    checkpoint: str
    params: SynthesisParams
    variations: List[VariationRecord]
    diversity: Optional[DiversityReport] = None


class StageReport(BaseModel):
    """Per-stage row of `sfx inspect`."""

    stage: int
    shape: Tuple[int, int]
    parameter_count: int
    hidden_blocks: int
    noise_amplitude: float
    first_rec: Optional[float] = None
    last_rec: Optional[float] = None


class InspectReport(BaseModel):
    """Summary of a checkpoint."""

    train_config: TrainConfig
    layer_names: List[str]
    sample_rate: int
    norm_mean: float
    norm_std: float
    completed_stages: int
    num_discriminators: int
    stages: List[StageReport]
    history_length: int
