"""Main CLI interface for sfxgan."""

from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import typer
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from sfxgan.core.config import ExperimentManifest, Settings
from sfxgan.core.errors import SfxGanError, TrainingDivergedError
from sfxgan.core.workflow import SynthWorkflow, TrainWorkflow, inspect_checkpoint
from sfxgan.utils.checkpoint import Checkpoint
from sfxgan.utils.presets import PRESET_KNOBS, PRESETS, Preset

app = typer.Typer(help="sfxgan - Learn one layered sound effect and render variations of it")
console = Console()

EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


def _given(**values: Any) -> Dict[str, Any]:
    """Drop options the user did not pass."""
    return {key: value for key, value in values.items() if value is not None}


def _fail(message: str, code: int) -> None:
    console.print(f"[bold red]Error:[/bold red] {message}")
    raise typer.Exit(code)


@app.command()
def train(
    layers: Optional[List[Path]] = typer.Argument(None, help="One mono WAV file per layer"),
    preset: Optional[Preset] = typer.Option(
        None, "--preset", "-p", help="Category preset (default: custom)"
    ),
    manifest_path: Optional[Path] = typer.Option(
        None, "--manifest", "-m", help="Experiment manifest JSON to start from"
    ),
    out_dir: Optional[Path] = typer.Option(None, "--out-dir", "-o", help="Run directory"),
    layer_names: Optional[List[str]] = typer.Option(
        None, "--layer-name", help="Name of each layer, in order (repeatable)"
    ),
    num_stages: Optional[int] = typer.Option(None, "--num-stages", help="Training stages"),
    iters_per_stage: Optional[int] = typer.Option(
        None, "--iters-per-stage", help="Iterations per stage"
    ),
    filters: Optional[int] = typer.Option(None, "--filters", help="Conv filters per layer"),
    d2_dilation: Optional[int] = typer.Option(
        None, "--d2-dilation", help="Dilation of the second discriminator"
    ),
    min_size: Optional[int] = typer.Option(None, "--min-size", help="Stage-0 reference size"),
    size_axis: Optional[str] = typer.Option(
        None, "--size-axis", help="Axis min-size refers to: shorter, time or frequency"
    ),
    lr: Optional[float] = typer.Option(None, "--lr", help="Learning rate"),
    concurrent_stages: Optional[int] = typer.Option(
        None, "--concurrent-stages", help="Generator stages trained at once"
    ),
    rec_weight: Optional[float] = typer.Option(None, "--rec-weight", help="Reconstruction weight"),
    gp_weight: Optional[float] = typer.Option(None, "--gp-weight", help="Gradient penalty weight"),
    d_steps: Optional[int] = typer.Option(None, "--d-steps", help="Critic steps per iteration"),
    g_steps: Optional[int] = typer.Option(None, "--g-steps", help="Generator steps per iteration"),
    use_d2: Optional[bool] = typer.Option(
        None, "--use-d2/--no-d2", help="Enable the dilated second discriminator"
    ),
    d2_start_stage: Optional[int] = typer.Option(
        None, "--d2-start-stage", help="Stage the second discriminator joins"
    ),
    single_channel: Optional[bool] = typer.Option(
        None, "--single-channel/--multi-channel", help="Train on the summed layers only"
    ),
    pre_pad_ms: Optional[float] = typer.Option(
        None, "--pre-pad-ms", help="Leading silence added per layer"
    ),
    lr_scale_lower: Optional[float] = typer.Option(
        None, "--lr-scale-lower", help="Learning-rate factor of the lower concurrent stages"
    ),
    d_combine: Optional[str] = typer.Option(
        None, "--d-combine", help="Combine D1 and D2 terms by sum or mean"
    ),
    disc_groups: Optional[int] = typer.Option(
        None, "--disc-groups", help="conv+LeakyReLU layers in the discriminator body"
    ),
    kernel_size: Optional[int] = typer.Option(None, "--kernel-size", help="Conv kernel size"),
    leaky_alpha: Optional[float] = typer.Option(
        None, "--leaky-alpha", help="LeakyReLU negative slope"
    ),
    feature_upsample_margin: Optional[float] = typer.Option(
        None, "--feature-upsample-margin", help="Relative upsampling of stage-0 features"
    ),
    noise_amp_scale: Optional[float] = typer.Option(
        None, "--noise-amp-scale", help="Factor on the per-stage noise amplitude"
    ),
    adam_betas: Tuple[float, float] = typer.Option(
        (None, None), "--adam-betas", help="Adam betas (beta1 beta2)"
    ),
    sample_rate: Optional[int] = typer.Option(
        None, "--sample-rate", help="Required input sample rate (Hz)"
    ),
    fft_size: Optional[int] = typer.Option(None, "--fft-size", help="STFT size"),
    hop: Optional[int] = typer.Option(None, "--hop", help="STFT hop in samples"),
    log_epsilon: Optional[float] = typer.Option(
        None, "--log-epsilon", help="Magnitude floor inside the log"
    ),
    seed: Optional[int] = typer.Option(None, "--seed", "-s", help="Random seed"),
    device: Optional[str] = typer.Option(None, "--device", help="Torch device"),
    quiet: bool = typer.Option(False, "--quiet", "-q", help="Hide progress output"),
) -> None:
    """
    Train a generator on the layers of one sound effect.

    A checkpoint is written to <out-dir>/checkpoint after every stage.
    """
    settings = Settings.from_env()
    overrides = _given(
        num_stages=num_stages,
        iters_per_stage=iters_per_stage,
        filters=filters,
        d2_dilation=d2_dilation,
        min_size=min_size,
        size_axis=size_axis,
        lr=lr,
        concurrent_stages=concurrent_stages,
        rec_weight=rec_weight,
        gp_weight=gp_weight,
        d_steps=d_steps,
        g_steps=g_steps,
        use_d2=use_d2,
        d2_start_stage=d2_start_stage,
        single_channel=single_channel,
        pre_pad_ms=pre_pad_ms,
        lr_scale_lower=lr_scale_lower,
        d_combine=d_combine,
        disc_groups=disc_groups,
        kernel_size=kernel_size,
        leaky_alpha=leaky_alpha,
        feature_upsample_margin=feature_upsample_margin,
        noise_amp_scale=noise_amp_scale,
        adam_betas=adam_betas if None not in adam_betas else None,
        sample_rate=sample_rate,
        seed=seed,
        device=device,
    )
    stft_overrides = _given(fft_size=fft_size, hop=hop, log_epsilon=log_epsilon)

    try:
        manifest = (
            ExperimentManifest.from_file(manifest_path) if manifest_path else ExperimentManifest()
        )
        train_overrides = {
            "device": settings.device,
            "sample_rate": settings.sample_rate,
            **manifest.train_overrides,
            **overrides,
        }
        if stft_overrides:
            train_overrides["stft"] = {**train_overrides.get("stft", {}), **stft_overrides}
        manifest = ExperimentManifest(
            preset=preset or manifest.preset,
            layer_paths=list(layers) if layers else manifest.layer_paths,
            layer_names=list(layer_names) if layer_names else manifest.layer_names,
            train_overrides=train_overrides,
            synth_overrides=manifest.synth_overrides,
            output_dir=out_dir or manifest.output_dir,
        )
        if not manifest.layer_paths:
            _fail("No layer files given", EXIT_VALIDATION)
        # Resolve up front so a bad preset fails before any audio is read.
        manifest.resolve_train_config()
    except (ValidationError, SfxGanError, FileNotFoundError) as e:
        _fail(str(e), EXIT_VALIDATION)

    try:
        checkpoint_path = TrainWorkflow(settings, verbose=not quiet).run(manifest)
    except TrainingDivergedError as e:
        console.print(f"[bold red]Training diverged:[/bold red] {e}")
        if e.checkpoint_path:
            console.print(f"[dim]Last good checkpoint: {e.checkpoint_path}[/dim]")
        raise typer.Exit(EXIT_RUNTIME)
    except (ValidationError, ValueError) as e:
        _fail(str(e), EXIT_VALIDATION)
    except Exception as e:
        console.print(f"[bold red]Unexpected error:[/bold red] {e}")
        raise typer.Exit(EXIT_RUNTIME)

    console.print("\n[bold green]Success![/bold green]")
    console.print(f"Checkpoint: [cyan]{checkpoint_path}[/cyan]")
    console.print(f"[yellow]Render variations with 'sfx synth {checkpoint_path}'.[/yellow]")


@app.command()
def synth(
    checkpoint: Path = typer.Argument(..., help="Checkpoint directory written by 'sfx train'"),
    out_dir: Optional[Path] = typer.Option(None, "--out-dir", "-o", help="Output directory"),
    num_variations: Optional[int] = typer.Option(
        None, "--num-variations", "-n", help="Number of mixes to render"
    ),
    retarget_fraction: Optional[float] = typer.Option(
        None, "--retarget-fraction", "-r", help="Time-axis multiplier range"
    ),
    allow_wide_retarget: Optional[bool] = typer.Option(
        None, "--allow-wide-retarget", help="Allow a retarget fraction above 0.15"
    ),
    shuffle_layers: Optional[bool] = typer.Option(
        None, "--shuffle-layers/--no-shuffle-layers", help="Shuffle layers across the batch"
    ),
    delay_range_ms: Tuple[float, float] = typer.Option(
        (None, None), "--delay-range-ms", help="Per-layer delay range (lo hi) in ms"
    ),
    gain_range_db: Tuple[float, float] = typer.Option(
        (None, None), "--gain-range-db", help="Per-layer gain range (lo hi) in dB"
    ),
    gl_iters: Optional[int] = typer.Option(None, "--gl-iters", help="Griffin-Lim iterations"),
    seed: Optional[int] = typer.Option(None, "--seed", "-s", help="Random seed"),
    use_reconstruction_noise: Optional[bool] = typer.Option(
        None, "--reconstruction-noise", help="Use the fixed reconstruction noise"
    ),
    write_layers: Optional[bool] = typer.Option(
        None, "--write-layers", help="Also write each variation's layers"
    ),
    subtype: Optional[str] = typer.Option(None, "--subtype", help="FLOAT or PCM_16"),
    manifest_path: Optional[Path] = typer.Option(
        None, "--manifest", "-m", help="Experiment manifest whose synth settings to use"
    ),
    quiet: bool = typer.Option(False, "--quiet", "-q", help="Hide progress output"),
) -> None:
    """
    Render variations from a trained checkpoint.

    Writes mix_000.wav ... and synthesis.json to the output directory.
    """
    settings = Settings.from_env()
    overrides = _given(
        num_variations=num_variations,
        retarget_fraction=retarget_fraction,
        allow_wide_retarget=allow_wide_retarget,
        shuffle_layers=shuffle_layers,
        delay_range_ms=delay_range_ms if None not in delay_range_ms else None,
        gain_range_db=gain_range_db if None not in gain_range_db else None,
        gl_iters=gl_iters,
        seed=seed,
        use_reconstruction_noise=use_reconstruction_noise,
        write_layers=write_layers,
        subtype=subtype,
    )

    try:
        manifest = (
            ExperimentManifest.from_file(manifest_path) if manifest_path else ExperimentManifest()
        )
        params = ExperimentManifest(
            synth_overrides={**manifest.synth_overrides, **overrides}
        ).resolve_synthesis_params()
    except (ValidationError, SfxGanError, FileNotFoundError) as e:
        _fail(str(e), EXIT_VALIDATION)

    try:
        paths = SynthWorkflow(settings, verbose=not quiet).run(checkpoint, params, out_dir)
    except (ValidationError, ValueError) as e:
        _fail(str(e), EXIT_VALIDATION)
    except Exception as e:
        console.print(f"[bold red]Unexpected error:[/bold red] {e}")
        raise typer.Exit(EXIT_RUNTIME)

    console.print(f"\n[bold green]Complete![/bold green] Rendered {len(paths)} file(s)")
    for path in paths:
        console.print(f"  [cyan]→[/cyan] {path}")


@app.command()
def inspect(
    checkpoint: Path = typer.Argument(..., help="Checkpoint directory"),
) -> None:
    """Show a checkpoint's configuration, stages and training losses."""
    try:
        report = inspect_checkpoint(Checkpoint.load(checkpoint))
    except SfxGanError as e:
        _fail(str(e), EXIT_VALIDATION)

    cfg = report.train_config
    console.print(f"\n[bold cyan]Checkpoint:[/bold cyan] {checkpoint}")
    console.print(
        f"Layers: {', '.join(report.layer_names)}  |  {report.sample_rate} Hz  |  "
        f"FFT {cfg.stft.fft_size}/{cfg.stft.hop}"
    )
    console.print(
        f"Stages: {report.completed_stages}/{cfg.num_stages}  |  filters {cfg.filters}  |  "
        f"discriminators {report.num_discriminators} (D2 dilation {cfg.d2_dilation}, "
        f"from stage {cfg.d2_start_stage})  |  seed {cfg.seed}"
    )
    console.print(f"Normalisation: mean {report.norm_mean:.4f}, std {report.norm_std:.4f}")

    table = Table(title=f"{report.history_length} logged iterations")
    table.add_column("#", justify="right")
    table.add_column("F x T")
    table.add_column("Blocks", justify="right")
    table.add_column("Params", justify="right")
    table.add_column("Noise", justify="right")
    table.add_column("Rec start", justify="right")
    table.add_column("Rec end", justify="right")
    for row in report.stages:
        table.add_row(
            str(row.stage),
            f"{row.shape[0]} x {row.shape[1]}",
            str(row.hidden_blocks),
            f"{row.parameter_count:,}",
            f"{row.noise_amplitude:.4f}",
            "-" if row.first_rec is None else f"{row.first_rec:.5f}",
            "-" if row.last_rec is None else f"{row.last_rec:.5f}",
        )
    console.print(table)


@app.command()
def presets() -> None:
    """List the category presets and the knobs they pin."""
    table = Table(title="Presets")
    table.add_column("Preset")
    for knob in PRESET_KNOBS:
        table.add_column(knob, justify="right")
    for preset, values in PRESETS.items():
        table.add_row(preset.value, *(str(values[knob]) for knob in PRESET_KNOBS))
    table.add_row(Preset.CUSTOM.value, *("required" for _ in PRESET_KNOBS))
    console.print(table)


if __name__ == "__main__":
    app()
