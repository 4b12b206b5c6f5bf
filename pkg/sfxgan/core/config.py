"""Configuration management for sfxgan."""

import json
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

from dotenv import load_dotenv
from pydantic import BaseModel, Field, field_validator, model_validator

from sfxgan.core.errors import ManifestError
from sfxgan.utils.presets import PRESET_KNOBS, Preset, preset_values

SCHEMA_VERSION = 1
DEFAULT_RETARGET_BOUND = 0.15


class Settings(BaseModel):
    """Process-level settings read from the environment."""

    output_root: Path = Field(
        default=Path("./runs"),
        description="Directory where checkpoints and renders are written by default",
    )
    device: str = Field(default="cpu", description="Torch device for training and synthesis")
    sample_rate: int = Field(default=44100, gt=0, description="Required input sample rate (Hz)")

    @classmethod
    def from_env(cls, env_file: Optional[Path] = None) -> "Settings":
        """Load settings from environment variables (and a .env file if present)."""
        load_dotenv(env_file or Path.cwd() / ".env")

        return cls(
            output_root=Path(os.getenv("SFXGAN_OUTPUT_ROOT", "./runs")).expanduser(),
            device=os.getenv("SFXGAN_DEVICE", "cpu"),
            sample_rate=int(os.getenv("SFXGAN_SAMPLE_RATE", "44100")),
        )


class StftParams(BaseModel):
    """Short-time Fourier transform parameters shared by analysis and Griffin-Lim."""

    fft_size: int = Field(default=512, description="FFT size; the Hann window has the same length")
    hop: int = Field(default=128, description="Hop between frames in samples")
    log_epsilon: float = Field(default=1e-4, gt=0, description="Magnitude floor inside the log")

    @field_validator("fft_size")
    @classmethod
    def _power_of_two(cls, value: int) -> int:
        if value < 2 or value & (value - 1):
            raise ValueError(f"fft_size must be a power of two, got {value}")
        return value

    @model_validator(mode="after")
    def _hop_fits(self) -> "StftParams":
        if not 0 < self.hop <= self.fft_size:
            raise ValueError(f"hop must be in (0, fft_size], got {self.hop}")
        return self

    @property
    def num_bins(self) -> int:
        return self.fft_size // 2 + 1

    def num_frames(self, length: int) -> int:
        """Frames fully inside a signal of `length` samples."""
        return 1 + (length - self.fft_size) // self.hop

    def signal_length(self, num_frames: int) -> int:
        """Samples produced by overlap-adding `num_frames` frames."""
        return self.fft_size + (num_frames - 1) * self.hop


class TrainConfig(BaseModel):
    """Hyperparameters of a progressive training run."""

    num_stages: int = Field(default=10, ge=2, description="Number of pyramid/training stages")
    iters_per_stage: int = Field(default=2000, ge=1, description="Iterations per stage")
    filters: int = Field(default=64, ge=1, description="Conv filters in every network layer")
    d2_dilation: int = Field(default=3, ge=1, description="Dilation of the second discriminator")
    min_size: int = Field(default=50, ge=1, description="Stage-0 size of the reference axis")
    size_axis: Literal["shorter", "time", "frequency"] = Field(
        default="shorter", description="Spatial axis `min_size` refers to"
    )
    lr: float = Field(default=5e-4, gt=0, description="Learning rate of the current stage")
    lr_scale_lower: float = Field(
        default=0.1, gt=0, description="Learning-rate factor of the lower concurrent stages"
    )
    concurrent_stages: int = Field(default=3, ge=1, description="Generator stages trained at once")
    rec_weight: float = Field(default=10.0, ge=0, description="Reconstruction loss weight")
    gp_weight: float = Field(default=10.0, gt=0, description="Gradient penalty weight")
    d_steps: int = Field(default=3, ge=1, description="Discriminator updates per iteration")
    g_steps: int = Field(default=3, ge=1, description="Generator updates per iteration")
    use_d2: bool = Field(default=True, description="Add the dilated second discriminator")
    d2_start_stage: Optional[int] = Field(
        default=None, ge=0, description="Stage the second discriminator joins (default halfway)"
    )
    d_combine: Literal["sum", "mean"] = Field(
        default="sum", description="How D1 and D2 adversarial terms are combined"
    )
    disc_groups: int = Field(default=3, ge=1, description="conv+LeakyReLU layers in the D body")
    kernel_size: int = Field(default=3, ge=1, description="Kernel size of every conv")
    leaky_alpha: float = Field(default=0.05, ge=0, description="LeakyReLU negative slope")
    feature_upsample_margin: float = Field(
        default=0.1, ge=0, description="Relative upsampling of stage-0 features after the head"
    )
    noise_amp_scale: float = Field(
        default=1.0, gt=0, description="Factor applied to the per-stage RMSE noise amplitude"
    )
    adam_betas: Tuple[float, float] = Field(default=(0.5, 0.999), description="Adam betas")
    seed: int = Field(default=0, description="Seed every random draw derives from")
    sample_rate: int = Field(default=44100, gt=0, description="Required input sample rate (Hz)")
    pre_pad_ms: float = Field(default=0.0, ge=0, description="Leading silence added per layer")
    single_channel: bool = Field(
        default=False, description="Sum all layers into one channel before training"
    )
    stft: StftParams = Field(default_factory=StftParams)
    device: str = Field(default="cpu", description="Torch device")

    @field_validator("kernel_size")
    @classmethod
    def _odd_kernel(cls, value: int) -> int:
        if value % 2 == 0:
            raise ValueError(f"kernel_size must be odd, got {value}")
        return value

    @model_validator(mode="after")
    def _check_stages(self) -> "TrainConfig":
        if self.concurrent_stages > self.num_stages:
            raise ValueError(
                f"concurrent_stages ({self.concurrent_stages}) exceeds num_stages "
                f"({self.num_stages})"
            )
        if self.d2_start_stage is None:
            self.d2_start_stage = self.num_stages // 2
        return self

    def discriminator_count(self, stage: int) -> int:
        """Number of discriminators trained at `stage`."""
        if self.use_d2 and self.d2_start_stage is not None and stage >= self.d2_start_stage:
            return 2
        return 1


class SynthesisParams(BaseModel):
    """Controls for generating a batch of variations."""

    num_variations: int = Field(default=10, ge=1, description="Number of mixes to generate")
    retarget_fraction: float = Field(
        default=DEFAULT_RETARGET_BOUND, ge=0, lt=1, description="Time-axis multiplier range r"
    )
    allow_wide_retarget: bool = Field(
        default=False, description="Permit retarget_fraction above the default 0.15 bound"
    )
    shuffle_layers: bool = Field(default=True, description="Shuffle layers across the batch")
    delay_range_ms: Tuple[float, float] = Field(
        default=(0.0, 30.0), description="Per-layer delay range in milliseconds"
    )
    gain_range_db: Tuple[float, float] = Field(
        default=(-3.0, 0.0), description="Per-layer gain range in dB"
    )
    gl_iters: int = Field(default=60, ge=0, description="Griffin-Lim iterations")
    seed: int = Field(default=0, description="Seed every random draw derives from")
    use_reconstruction_noise: bool = Field(
        default=False, description="Drive the generator with the fixed reconstruction noise"
    )
    write_layers: bool = Field(default=False, description="Also write per-layer WAV files")
    subtype: Literal["FLOAT", "PCM_16"] = Field(default="FLOAT", description="WAV sample format")

    @model_validator(mode="after")
    def _check_ranges(self) -> "SynthesisParams":
        if self.retarget_fraction > DEFAULT_RETARGET_BOUND and not self.allow_wide_retarget:
            raise ValueError(
                f"retarget_fraction {self.retarget_fraction} exceeds {DEFAULT_RETARGET_BOUND}; "
                "set allow_wide_retarget to go beyond it"
            )
        delay_lo, delay_hi = self.delay_range_ms
        if delay_lo < 0 or delay_hi < delay_lo:
            raise ValueError(
                f"delay_range_ms must satisfy 0 <= lo <= hi, got {self.delay_range_ms}"
            )
        gain_lo, gain_hi = self.gain_range_db
        if gain_hi < gain_lo:
            raise ValueError(f"gain_range_db must satisfy lo <= hi, got {self.gain_range_db}")
        return self


class ExperimentManifest(BaseModel):
    """A replayable description of one training (and optional synthesis) run."""

    schema_version: int = Field(default=SCHEMA_VERSION)
    preset: Preset = Field(default=Preset.CUSTOM)
    layer_paths: List[Path] = Field(default_factory=list)
    layer_names: Optional[List[str]] = None
    train_overrides: Dict[str, Any] = Field(default_factory=dict)
    synth_overrides: Dict[str, Any] = Field(default_factory=dict)
    output_dir: Optional[Path] = None

    @model_validator(mode="after")
    def _check_manifest(self) -> "ExperimentManifest":
        if self.schema_version != SCHEMA_VERSION:
            raise ValueError(f"Unsupported schema_version {self.schema_version}")
        if self.layer_names is not None and len(self.layer_names) != len(self.layer_paths):
            raise ValueError("layer_names must have one entry per layer path")
        return self

    def resolve_train_config(self) -> TrainConfig:
        """
        Merge the preset and explicit overrides into a TrainConfig.

        Returns:
            Fully resolved TrainConfig

        Raises:
            ManifestError: If `custom` is missing any preset knob
        """
        if self.preset == Preset.CUSTOM:
            missing = [knob for knob in PRESET_KNOBS if knob not in self.train_overrides]
            if missing:
                raise ManifestError(
                    "Preset 'custom' requires explicit values for: " + ", ".join(missing)
                )
        values: Dict[str, Any] = preset_values(self.preset)
        values.update(self.train_overrides)
        return TrainConfig(**values)

    def resolve_synthesis_params(self) -> SynthesisParams:
        """Build SynthesisParams from the manifest overrides."""
        return SynthesisParams(**self.synth_overrides)

    def overridden_knobs(self) -> Dict[str, Any]:
        """
        Explicit overrides that move a knob off its preset or default value.

        The knobs `custom` requires are always reported.

        Returns:
            Resolved value of each overridden knob, keyed by field name
        """
        baseline = TrainConfig(**preset_values(self.preset)).model_dump(mode="json")
        resolved = self.resolve_train_config().model_dump(mode="json")
        required = PRESET_KNOBS if self.preset == Preset.CUSTOM else ()
        return {
            key: resolved[key]
            for key in self.train_overrides
            if key in resolved and (key in required or resolved[key] != baseline[key])
        }

    @classmethod
    def from_file(cls, path: Path) -> "ExperimentManifest":
        """Load a manifest JSON document."""
        if not path.exists():
            raise FileNotFoundError(f"Manifest not found: {path}")
        return cls.model_validate(json.loads(path.read_text()))

    def save(self, path: Path) -> Path:
        """Write the manifest as JSON."""
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.model_dump_json(indent=2))
        return path
