"""Checkpoint directories: manifest, weight blobs, reconstruction noise and loss history.

Layout::

    checkpoint/
      manifest.json
      generator_head.pt
      generator_stage_00.pt ... generator_stage_NN.pt
      generator_tail.pt
      discriminator_1.pt
      discriminator_2.pt        (once the dilated discriminator is active)
      reconstruction_noise.pt
      loss_history.csv
"""

import csv
import json
import shutil
from pathlib import Path
from typing import Dict, List, Optional, Union

import torch
import torch.nn as nn
from pydantic import ValidationError

from sfxgan.core.errors import CheckpointError
from sfxgan.core.models import CheckpointManifest, LossRecord, MultiChannelSpectrogram, NoiseMapSet
from sfxgan.generators.networks import GrowingGenerator, PatchDiscriminator, count_parameters

MANIFEST_FILE = "manifest.json"
HISTORY_FILE = "loss_history.csv"
NOISE_FILE = "reconstruction_noise.pt"
HISTORY_FIELDS = ["iteration", "stage", "d_loss", "g_adv", "rec"]


def _stage_file(stage: int) -> str:
    return f"generator_stage_{stage:02d}.pt"


class Checkpoint:
    """Everything needed to synthesise without the training audio."""

    def __init__(
        self,
        manifest: CheckpointManifest,
        generator: GrowingGenerator,
        discriminators: List[PatchDiscriminator],
        reconstruction_noise: List[torch.Tensor],
        history: Optional[List[LossRecord]] = None,
    ):
        self.manifest = manifest
        self.generator = generator
        self.discriminators = discriminators
        self.reconstruction_noise = reconstruction_noise
        self.history = history or []

    @property
    def num_channels(self) -> int:
        return len(self.manifest.layer_names)

    @property
    def final_stage(self) -> int:
        return self.manifest.completed_stages - 1

    @property
    def stage_shapes(self) -> List[tuple]:
        return [tuple(s) for s in self.manifest.pyramid_shapes[: self.manifest.completed_stages]]

    def reconstruction_noise_set(self) -> NoiseMapSet:
        return NoiseMapSet(
            maps=list(self.reconstruction_noise),
            amplitudes=list(self.manifest.noise_amplitudes),
        )

    def spectrogram(self, data: torch.Tensor) -> MultiChannelSpectrogram:
        """Wrap generated C x F x T data with this checkpoint's statistics."""
        return MultiChannelSpectrogram(
            data=data.detach().to("cpu", torch.float32),
            norm_mean=self.manifest.norm_mean,
            norm_std=self.manifest.norm_std,
            stft=self.manifest.stft,
            layer_names=list(self.manifest.layer_names),
            sample_rate=self.manifest.sample_rate,
        )

    @torch.no_grad()
    def reconstruct(self) -> MultiChannelSpectrogram:
        """Final-stage output under the fixed reconstruction noise."""
        device = next(self.generator.parameters()).device
        out = self.generator(self.reconstruction_noise_set().to(device), self.final_stage)
        return self.spectrogram(out[0])

    def parameter_counts(self) -> List[int]:
        """Cumulative generator parameter count with stages 0..n active, per stage."""
        counts = []
        running = count_parameters([self.generator.tail])
        for stage in range(self.generator.num_stages):
            running += count_parameters(self.generator.stage_modules(stage))
            counts.append(running)
        return counts

    def save(self, path: Path) -> Path:
        """
        Atomically write the checkpoint directory.

        The new checkpoint is written next to `path` and renamed into place, so
        an interrupted save leaves the previous checkpoint intact.
        """
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        staging = path.parent / f".{path.name}.tmp"
        backup = path.parent / f".{path.name}.old"
        for leftover in (staging, backup):
            if leftover.exists():
                shutil.rmtree(leftover)
        staging.mkdir()

        (staging / MANIFEST_FILE).write_text(self.manifest.model_dump_json(indent=2))
        torch.save(self.generator.head.state_dict(), staging / "generator_head.pt")
        for stage, block in enumerate(self.generator.body):
            torch.save(block.state_dict(), staging / _stage_file(stage))
        torch.save(self.generator.tail.state_dict(), staging / "generator_tail.pt")
        for idx, critic in enumerate(self.discriminators, start=1):
            torch.save(critic.state_dict(), staging / f"discriminator_{idx}.pt")
        torch.save([n.detach().cpu() for n in self.reconstruction_noise], staging / NOISE_FILE)
        write_history(self.history, staging / HISTORY_FILE)

        if path.exists():
            path.rename(backup)
        staging.rename(path)
        if backup.exists():
            shutil.rmtree(backup)
        return path

    @classmethod
    def load(cls, path: Path, device: Union[str, torch.device] = "cpu") -> "Checkpoint":
        """
        Load a checkpoint directory.

        Raises:
            CheckpointError: If the directory, the manifest or any blob is missing or corrupt
        """
        path = Path(path)
        if not path.is_dir():
            raise CheckpointError(f"Checkpoint directory not found: {path}")
        manifest_path = path / MANIFEST_FILE
        if not manifest_path.exists():
            raise CheckpointError(f"Checkpoint {path} is missing {MANIFEST_FILE}")
        try:
            manifest = CheckpointManifest.model_validate(json.loads(manifest_path.read_text()))
        except (json.JSONDecodeError, ValidationError) as e:
            raise CheckpointError(f"Corrupt {MANIFEST_FILE} in {path}: {e}") from e

        cfg = manifest.train_config
        channels = len(manifest.layer_names)
        generator = GrowingGenerator(
            channels,
            filters=cfg.filters,
            kernel_size=cfg.kernel_size,
            alpha=cfg.leaky_alpha,
            upsample_margin=cfg.feature_upsample_margin,
        )
        for _ in range(manifest.completed_stages - 1):
            generator.add_stage()

        _load_blob(generator.head, path, "generator_head.pt")
        for stage, block in enumerate(generator.body):
            _load_blob(block, path, _stage_file(stage))
        _load_blob(generator.tail, path, "generator_tail.pt")

        discriminators = []
        for idx in range(1, manifest.num_discriminators + 1):
            critic = PatchDiscriminator(
                channels,
                filters=cfg.filters,
                kernel_size=cfg.kernel_size,
                dilation=1 if idx == 1 else cfg.d2_dilation,
                alpha=cfg.leaky_alpha,
                groups=cfg.disc_groups,
            )
            _load_blob(critic, path, f"discriminator_{idx}.pt")
            discriminators.append(critic.to(device))

        noise = _read_blob(path, NOISE_FILE)
        if not isinstance(noise, list) or len(noise) != manifest.completed_stages:
            raise CheckpointError(f"{NOISE_FILE} in {path} does not hold one map per stage")

        history_path = path / HISTORY_FILE
        history = read_history(history_path) if history_path.exists() else []
        return cls(
            manifest=manifest,
            generator=generator.to(device),
            discriminators=discriminators,
            reconstruction_noise=[n.to(device) for n in noise],
            history=history,
        )


def _read_blob(path: Path, name: str) -> object:
    blob = path / name
    if not blob.exists():
        raise CheckpointError(f"Checkpoint {path} is missing {name}")
    try:
        return torch.load(blob, map_location="cpu", weights_only=True)
    except Exception as e:
        raise CheckpointError(f"Could not read {name} in {path}: {e}") from e


def _load_blob(module: nn.Module, path: Path, name: str) -> None:
    state = _read_blob(path, name)
    try:
        module.load_state_dict(state)  # type: ignore[arg-type]
    except (RuntimeError, TypeError) as e:
        raise CheckpointError(f"{name} in {path} does not match the manifest: {e}") from e


def write_history(history: List[LossRecord], path: Path) -> Path:
    """Write the loss history as CSV (iteration, stage, d_loss, g_adv, rec)."""
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=HISTORY_FIELDS)
        writer.writeheader()
        for record in history:
            writer.writerow({k: repr(v) for k, v in record.model_dump().items()})
    return path


def read_history(path: Path) -> List[LossRecord]:
    with open(path, newline="") as f:
        return [LossRecord(**row) for row in csv.DictReader(f)]


def summarize_history(history: List[LossRecord]) -> Dict[int, Dict[str, float]]:
    """Per-stage first and last losses."""
    summary: Dict[int, Dict[str, float]] = {}
    for record in history:
        entry = summary.setdefault(
            record.stage,
            {"first_rec": record.rec, "first_d_loss": record.d_loss, "iterations": 0},
        )
        entry["last_rec"] = record.rec
        entry["last_d_loss"] = record.d_loss
        entry["last_g_adv"] = record.g_adv
        entry["iterations"] += 1
    return summary
