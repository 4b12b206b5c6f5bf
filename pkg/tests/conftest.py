"""Shared fixtures: synthetic layers on disk and a small trained checkpoint."""

from pathlib import Path
from typing import Callable, List

import numpy as np
import pytest
import soundfile as sf
import torch

from sfxgan.core.config import StftParams, TrainConfig
from sfxgan.core.models import CheckpointManifest, LossRecord
from sfxgan.generators.networks import GrowingGenerator, PatchDiscriminator
from sfxgan.generators.trainer import train
from sfxgan.processors.audio_io import load_layers
from sfxgan.utils.checkpoint import Checkpoint

SAMPLE_RATE = 44100


def decaying_tone(
    freq: float,
    duration: float = 0.2,
    decay: float = 25.0,
    sample_rate: int = SAMPLE_RATE,
) -> np.ndarray:
    t = np.arange(int(round(duration * sample_rate))) / sample_rate
    return np.sin(2 * np.pi * freq * t) * np.exp(-decay * t)


def smoke_config(**overrides) -> TrainConfig:
    values = dict(
        num_stages=2,
        iters_per_stage=200,
        filters=16,
        min_size=16,
        d2_dilation=3,
        concurrent_stages=2,
        seed=0,
    )
    values.update(overrides)
    return TrainConfig(**values)


def untrained_checkpoint(filters: int = 8, stages: int = 3, channels: int = 2) -> Checkpoint:
    """A randomly initialised checkpoint whose last stage matches its STFT bins."""
    torch.manual_seed(0)
    stft = StftParams(fft_size=64, hop=16)
    cfg = TrainConfig(
        num_stages=stages, filters=filters, concurrent_stages=min(3, stages), stft=stft
    )
    shapes = [(stft.num_bins * (i + 1) // stages, 10 * (i + 1)) for i in range(stages)]
    gen = GrowingGenerator(channels, filters=filters)
    for _ in range(stages - 1):
        gen.add_stage()
    noise = [torch.randn(1, channels, *shapes[0])]
    noise += [torch.zeros(1, filters, *s) for s in shapes[1:]]
    return Checkpoint(
        manifest=CheckpointManifest(
            train_config=cfg,
            stft=stft,
            norm_mean=-4.0,
            norm_std=2.5,
            sample_rate=44100,
            layer_names=[f"layer_{i}" for i in range(channels)],
            pyramid_shapes=shapes,
            noise_amplitudes=[1.0] + [0.2] * (stages - 1),
            completed_stages=stages,
            num_discriminators=2,
            seed=0,
        ),
        generator=gen,
        discriminators=[
            PatchDiscriminator(channels, filters=filters),
            PatchDiscriminator(channels, filters=filters, dilation=cfg.d2_dilation),
        ],
        reconstruction_noise=noise,
        history=[LossRecord(iteration=0, stage=0, d_loss=0.5, g_adv=-0.1, rec=0.123456789)],
    )


@pytest.fixture
def write_layer(tmp_path: Path) -> Callable[..., Path]:
    """Write mono samples to tmp_path/<name>.wav."""

    def _write(
        name: str,
        samples: np.ndarray,
        sample_rate: int = SAMPLE_RATE,
        subtype: str = "FLOAT",
    ) -> Path:
        path = tmp_path / f"{name}.wav"
        sf.write(str(path), samples, sample_rate, subtype=subtype)
        return path

    return _write


@pytest.fixture
def layer_files(write_layer) -> List[Path]:
    """A 0.2 s two-layer toy sound: a low thump and a brighter click."""
    return [
        write_layer("body", 0.8 * decaying_tone(180.0, decay=15.0)),
        write_layer("click", 0.5 * decaying_tone(2400.0, decay=60.0)),
    ]


@pytest.fixture(scope="session")
def smoke_dir(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("smoke")
    paths = []
    for name, samples in (
        ("body", 0.8 * decaying_tone(180.0, decay=15.0)),
        ("click", 0.5 * decaying_tone(2400.0, decay=60.0)),
    ):
        path = root / f"{name}.wav"
        sf.write(str(path), samples, SAMPLE_RATE, subtype="FLOAT")
        paths.append(path)
    layers = load_layers(paths)
    train(layers, smoke_config(), output_dir=root / "run", verbose=False)
    return root / "run" / "checkpoint"


@pytest.fixture(scope="session")
def smoke_checkpoint(smoke_dir: Path) -> Checkpoint:
    return Checkpoint.load(smoke_dir)
