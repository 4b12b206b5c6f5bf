"""Workflow orchestration for training on a layered sound and rendering variations."""

from datetime import datetime
from pathlib import Path
from typing import List, Optional

from rich.console import Console
from rich.progress import Progress, SpinnerColumn, TextColumn
from rich.table import Table

from sfxgan.core.config import ExperimentManifest, Settings, SynthesisParams
from sfxgan.core.errors import AudioWriteError
from sfxgan.core.models import (
    InspectReport,
    StageReport,
    SynthesisManifest,
    VariationRecord,
    train_config_summary,
)
from sfxgan.generators.synthesis import diversity_report, synthesize_batch
from sfxgan.generators.trainer import CHECKPOINT_DIR, train
from sfxgan.processors.audio_io import load_layers, write_wav
from sfxgan.utils.checkpoint import Checkpoint, summarize_history

console = Console()

EXPERIMENT_FILE = "experiment.json"
SYNTHESIS_FILE = "synthesis.json"


class TrainWorkflow:
    """Loads the layers named by a manifest, trains, and leaves a replayable run directory."""

    def __init__(self, settings: Settings, verbose: bool = True):
        self.settings = settings
        self.verbose = verbose

    def default_output_dir(self, manifest: ExperimentManifest) -> Path:
        stamp = datetime.now().strftime("%Y%m%d-%H%M%S")
        return self.settings.output_root / f"{manifest.preset.value}-{stamp}"

    def run(self, manifest: ExperimentManifest) -> Path:
        """
        Train on the manifest's layers.

        Args:
            manifest: Experiment description (preset, layers, overrides)

        Returns:
            Path of the final checkpoint directory

        Raises:
            ManifestError: If the preset cannot be resolved
            AudioFormatError: If a layer cannot be used
            TrainingDivergedError: If training produces a non-finite loss
        """
        cfg = manifest.resolve_train_config()
        output_dir = manifest.output_dir or self.default_output_dir(manifest)

        if self.verbose:
            console.print(f"\n[bold cyan]Preset:[/bold cyan] {manifest.preset.value}")
            console.print(f"[dim]{train_config_summary(cfg)}[/dim]")
            for knob, value in manifest.overridden_knobs().items():
                console.print(f"[yellow]⚠[/yellow] Override {knob} = {value}")

        layers = load_layers(
            manifest.layer_paths,
            pre_pad_ms=cfg.pre_pad_ms,
            names=manifest.layer_names,
            expected_sample_rate=cfg.sample_rate,
        )
        if self.verbose:
            console.print(
                f"[green]✓[/green] Loaded {layers.num_layers} layer(s) "
                f"({', '.join(layers.names)}), {layers.duration:.3f}s at {layers.sample_rate} Hz"
            )

        replay = manifest.model_copy(update={"output_dir": output_dir})
        replay.save(Path(output_dir) / EXPERIMENT_FILE)

        ckpt = train(layers, cfg, output_dir=Path(output_dir), verbose=self.verbose)
        if self.verbose:
            print_loss_summary(ckpt)
        return Path(output_dir) / CHECKPOINT_DIR


class SynthWorkflow:
    """Renders a batch of variations from a checkpoint to WAV files."""

    def __init__(self, settings: Settings, verbose: bool = True):
        self.settings = settings
        self.verbose = verbose

    def default_output_dir(self, checkpoint_path: Path) -> Path:
        stamp = datetime.now().strftime("%Y%m%d-%H%M%S")
        run_name = Path(checkpoint_path).resolve().parent.name
        return self.settings.output_root / "renders" / f"{run_name}-{stamp}"

    def run(
        self,
        checkpoint_path: Path,
        params: SynthesisParams,
        output_dir: Optional[Path] = None,
    ) -> List[Path]:
        """
        Generate `params.num_variations` mixes and write them with a JSON manifest.

        Args:
            checkpoint_path: Checkpoint directory written by training
            params: Synthesis controls
            output_dir: Destination (default: under the output root)

        Returns:
            Paths of the mix WAVs, in variation order

        Raises:
            CheckpointError: If the checkpoint cannot be loaded
            AudioWriteError: If the output directory is not writable
        """
        output_dir = Path(output_dir or self.default_output_dir(checkpoint_path))
        try:
            output_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise AudioWriteError(f"Cannot create output directory {output_dir}: {e}") from e

        ckpt = Checkpoint.load(checkpoint_path, device=self.settings.device)
        if self.verbose:
            console.print(
                f"\n[bold cyan]Rendering[/bold cyan] {params.num_variations} variation(s) "
                f"from {checkpoint_path}"
            )

        with Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            console=console,
            transient=True,
            disable=not self.verbose,
        ) as progress:
            task = progress.add_task("Generating and inverting spectrograms...", total=None)
            variations = synthesize_batch(ckpt, params)
            progress.remove_task(task)

        sample_rate = ckpt.manifest.sample_rate
        mix_paths: List[Path] = []
        records: List[VariationRecord] = []
        for variation in variations:
            mix_path = write_wav(
                variation.mix,
                sample_rate,
                output_dir / f"mix_{variation.index:03d}.wav",
                subtype=params.subtype,
            )
            layer_files = []
            if params.write_layers:
                for name, layer in zip(variation.per_layer.names, variation.per_layer.layers):
                    layer_path = write_wav(
                        layer,
                        sample_rate,
                        output_dir / f"mix_{variation.index:03d}_{name}.wav",
                        subtype=params.subtype,
                    )
                    layer_files.append(layer_path.name)
            mix_paths.append(mix_path)
            records.append(
                VariationRecord(
                    index=variation.index,
                    file=mix_path.name,
                    layer_files=layer_files,
                    seed=variation.seed,
                    retarget_multiplier=variation.retarget_multiplier,
                    num_frames=variation.num_frames,
                    duration=variation.duration,
                    source_variations=variation.source_variations,
                    layer_multipliers=variation.layer_multipliers,
                    layer_num_frames=variation.layer_num_frames,
                    delays_ms=variation.delays_ms,
                    gains_db=variation.gains_db,
                    clipped_samples=variation.clipped_samples,
                )
            )

        report = diversity_report([v.mix for v in variations], ckpt.manifest.stft, sample_rate)
        manifest = SynthesisManifest(
            checkpoint=str(checkpoint_path),
            params=params,
            variations=records,
            diversity=report,
        )
        (output_dir / SYNTHESIS_FILE).write_text(manifest.model_dump_json(indent=2))

        if self.verbose:
            console.print(f"[green]✓[/green] Wrote {len(mix_paths)} mix(es) to {output_dir}")
            console.print(
                f"[dim]durations {min(report.durations):.3f}-{max(report.durations):.3f}s, "
                f"{report.num_distinct_durations} distinct, "
                f"mean spectral distance {report.mean_distance:.2f}[/dim]"
            )
        return mix_paths


def inspect_checkpoint(ckpt: Checkpoint) -> InspectReport:
    """Collect the per-stage summary printed by `sfx inspect`."""
    counts = ckpt.parameter_counts()
    summary = summarize_history(ckpt.history)
    stages = []
    for stage, shape in enumerate(ckpt.stage_shapes):
        losses = summary.get(stage, {})
        stages.append(
            StageReport(
                stage=stage,
                shape=shape,
                parameter_count=counts[stage],
                hidden_blocks=ckpt.generator.hidden_block_count(stage),
                noise_amplitude=ckpt.manifest.noise_amplitudes[stage],
                first_rec=losses.get("first_rec"),
                last_rec=losses.get("last_rec"),
            )
        )
    return InspectReport(
        train_config=ckpt.manifest.train_config,
        layer_names=list(ckpt.manifest.layer_names),
        sample_rate=ckpt.manifest.sample_rate,
        norm_mean=ckpt.manifest.norm_mean,
        norm_std=ckpt.manifest.norm_std,
        completed_stages=ckpt.manifest.completed_stages,
        num_discriminators=ckpt.manifest.num_discriminators,
        stages=stages,
        history_length=len(ckpt.history),
    )


def print_loss_summary(ckpt: Checkpoint) -> None:
    """Print the final losses of every trained stage."""
    table = Table(title="Final losses")
    table.add_column("Stage", justify="right")
    table.add_column("Iters", justify="right")
    table.add_column("D loss", justify="right")
    table.add_column("G adv", justify="right")
    table.add_column("Rec", justify="right")
    for stage, losses in sorted(summarize_history(ckpt.history).items()):
        table.add_row(
            str(stage),
            str(losses["iterations"]),
            f"{losses['last_d_loss']:.4f}",
            f"{losses['last_g_adv']:.4f}",
            f"{losses['last_rec']:.5f}",
        )
    console.print(table)
