"""Progressive multi-stage adversarial training on one layered sound effect."""

import math
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import torch
import torch.optim as optim
from rich.console import Console
from rich.progress import BarColumn, Progress, TextColumn, TimeRemainingColumn

from sfxgan.core.config import TrainConfig
from sfxgan.core.errors import TrainingDivergedError
from sfxgan.core.models import (
    AudioLayerSet,
    CheckpointManifest,
    LossRecord,
    MultiChannelSpectrogram,
    NoiseMapSet,
    PyramidSpec,
)
from sfxgan.generators.losses import gradient_norms, reconstruction_loss, wgan_gp_losses
from sfxgan.generators.networks import GrowingGenerator, PatchDiscriminator, init_weights
from sfxgan.processors.audio_io import combine_layers
from sfxgan.processors.pyramid import build_pyramid, plan_pyramid, resize
from sfxgan.processors.spectral import stft_log_magnitude
from sfxgan.utils.checkpoint import Checkpoint

console = Console()

CHECKPOINT_DIR = "checkpoint"


class ProgressiveTrainer:
    """Trains the growing generator stage by stage against one or two patch critics."""

    def __init__(self, cfg: TrainConfig, output_dir: Optional[Path] = None, verbose: bool = True):
        """
        Initialize the trainer.

        Args:
            cfg: Training hyperparameters
            output_dir: Directory receiving `checkpoint/` after every stage (None: keep in memory)
            verbose: Show progress bars and per-stage summaries
        """
        self.cfg = cfg
        self.output_dir = Path(output_dir) if output_dir else None
        self.verbose = verbose
        self.device = torch.device(cfg.device)
        self.rng = torch.Generator().manual_seed(cfg.seed)
        self.last_checkpoint: Optional[Path] = None

    def prepare(
        self, layers: AudioLayerSet
    ) -> Tuple[MultiChannelSpectrogram, PyramidSpec, List[torch.Tensor]]:
        """Spectrogram, pyramid plan and per-stage real tensors (1 x C x F_n x T_n)."""
        if self.cfg.single_channel and layers.num_layers > 1:
            layers = combine_layers(layers)
        spec = stft_log_magnitude(layers, self.cfg.stft)
        pspec = plan_pyramid(
            (spec.data.shape[1], spec.data.shape[2]),
            num_stages=self.cfg.num_stages,
            min_size=self.cfg.min_size,
            size_axis=self.cfg.size_axis,
        )
        reals = [level.unsqueeze(0).to(self.device) for level in build_pyramid(spec, pspec)]
        return spec, pspec, reals

    def _draw(self, channels: int, shape: Tuple[int, int]) -> torch.Tensor:
        return torch.randn(1, channels, *shape, generator=self.rng).to(self.device)

    def _noise(
        self, generator: GrowingGenerator, shapes: List[Tuple[int, int]], amps: List[float]
    ) -> NoiseMapSet:
        maps = [self._draw(generator.noise_channels(i), shape) for i, shape in enumerate(shapes)]
        return NoiseMapSet(maps=maps, amplitudes=list(amps))

    @torch.no_grad()
    def _noise_amplitude(
        self,
        generator: GrowingGenerator,
        fixed: List[torch.Tensor],
        amps: List[float],
        real: torch.Tensor,
    ) -> float:
        """Scaled RMSE between the upsampled previous reconstruction and the real stage."""
        previous = generator(NoiseMapSet(maps=list(fixed), amplitudes=list(amps)))
        upsampled = resize(previous, (real.shape[-2], real.shape[-1]))
        rmse = torch.sqrt(torch.mean((upsampled - real) ** 2))
        return self.cfg.noise_amp_scale * rmse.item()

    def _generator_optimizer(self, generator: GrowingGenerator, stage: int) -> optim.Adam:
        """Unfreeze the top `concurrent_stages` stages and give lower ones a scaled lr."""
        lowest = max(0, stage - self.cfg.concurrent_stages + 1)
        groups: List[Dict] = []
        for idx in range(generator.num_stages):
            active = idx >= lowest
            params = [p for m in generator.stage_modules(idx) for p in m.parameters()]
            for p in params:
                p.requires_grad_(active)
            if active:
                lr = self.cfg.lr if idx == stage else self.cfg.lr * self.cfg.lr_scale_lower
                groups.append({"params": params, "lr": lr})
        groups.append({"params": list(generator.tail.parameters()), "lr": self.cfg.lr})
        return optim.Adam(groups, lr=self.cfg.lr, betas=self.cfg.adam_betas)

    def _combine(self, terms: List[torch.Tensor]) -> torch.Tensor:
        total = torch.stack(terms).sum()
        return total / len(terms) if self.cfg.d_combine == "mean" else total

    def _check_finite(self, stage: int, iteration: int, **losses: float) -> None:
        bad = {name: value for name, value in losses.items() if not math.isfinite(value)}
        if bad:
            raise TrainingDivergedError(
                f"Training diverged at stage {stage}, iteration {iteration}: {bad}",
                stage=stage,
                iteration=iteration,
                checkpoint_path=self.last_checkpoint,
            )

    def train(self, layers: AudioLayerSet) -> Checkpoint:
        """
        Run every stage and return the final checkpoint.

        Raises:
            TrainingDivergedError: If any loss becomes non-finite; the last
                per-stage checkpoint on disk is kept
        """
        cfg = self.cfg
        torch.manual_seed(cfg.seed)
        spec, pspec, reals = self.prepare(layers)
        channels = spec.num_channels
        shapes = pspec.per_stage_shapes

        generator = GrowingGenerator(
            channels,
            filters=cfg.filters,
            kernel_size=cfg.kernel_size,
            alpha=cfg.leaky_alpha,
            upsample_margin=cfg.feature_upsample_margin,
        ).to(self.device)
        generator.apply(init_weights)
        critics = [self._critic(channels, dilation=1)]

        fixed: List[torch.Tensor] = []
        amps: List[float] = []
        history: List[LossRecord] = []
        checkpoint: Optional[Checkpoint] = None

        if self.verbose:
            console.print(
                f"[bold cyan]Training[/bold cyan] {channels}-channel spectrogram "
                f"{tuple(spec.data.shape)} over {cfg.num_stages} stages"
            )

        for stage in range(cfg.num_stages):
            real = reals[stage]
            if stage == 0:
                fixed.append(self._draw(channels, shapes[0]))
                amps.append(1.0)
            else:
                amps.append(self._noise_amplitude(generator, fixed, amps, real))
                fixed.append(torch.zeros(1, cfg.filters, *shapes[stage], device=self.device))
                generator.add_stage()
            if cfg.discriminator_count(stage) == 2 and len(critics) == 1:
                critics.append(self._critic(channels, dilation=cfg.d2_dilation))

            self._train_stage(stage, generator, critics, real, shapes, fixed, amps, history)

            checkpoint = Checkpoint(
                manifest=CheckpointManifest(
                    train_config=cfg,
                    stft=spec.stft,
                    norm_mean=spec.norm_mean,
                    norm_std=spec.norm_std,
                    sample_rate=spec.sample_rate,
                    layer_names=list(spec.layer_names),
                    pyramid_shapes=list(shapes),
                    noise_amplitudes=list(amps),
                    completed_stages=stage + 1,
                    num_discriminators=len(critics),
                    seed=cfg.seed,
                ),
                generator=generator,
                discriminators=list(critics),
                reconstruction_noise=list(fixed),
                history=list(history),
            )
            if self.output_dir is not None:
                self.last_checkpoint = checkpoint.save(self.output_dir / CHECKPOINT_DIR)

            if self.verbose:
                last = history[-1]
                console.print(
                    f"[green]✓[/green] Stage {stage} {shapes[stage]} "
                    f"critics={len(critics)} noise_amp={amps[-1]:.4f} "
                    f"d_loss={last.d_loss:.4f} g_adv={last.g_adv:.4f} rec={last.rec:.5f}"
                )

        assert checkpoint is not None
        return checkpoint

    def _critic(self, channels: int, dilation: int) -> PatchDiscriminator:
        critic = PatchDiscriminator(
            channels,
            filters=self.cfg.filters,
            kernel_size=self.cfg.kernel_size,
            dilation=dilation,
            alpha=self.cfg.leaky_alpha,
            groups=self.cfg.disc_groups,
        )
        critic.apply(init_weights)
        return critic.to(self.device)

    def _train_stage(
        self,
        stage: int,
        generator: GrowingGenerator,
        critics: List[PatchDiscriminator],
        real: torch.Tensor,
        shapes: List[Tuple[int, int]],
        fixed: List[torch.Tensor],
        amps: List[float],
        history: List[LossRecord],
    ) -> None:
        cfg = self.cfg
        opt_g = self._generator_optimizer(generator, stage)
        opt_ds = [
            optim.Adam(critic.parameters(), lr=cfg.lr, betas=cfg.adam_betas) for critic in critics
        ]
        rec_noise = NoiseMapSet(maps=list(fixed), amplitudes=list(amps))

        with Progress(
            TextColumn("[progress.description]{task.description}"),
            BarColumn(),
            TextColumn("{task.completed}/{task.total}"),
            TimeRemainingColumn(),
            console=console,
            transient=True,
            disable=not self.verbose,
        ) as progress:
            task = progress.add_task(f"Stage {stage}", total=cfg.iters_per_stage)
            for iteration in range(cfg.iters_per_stage):
                for _ in range(cfg.d_steps):
                    noise = self._noise(generator, shapes[: stage + 1], amps)
                    with torch.no_grad():
                        fake = generator(noise, stage)
                    d_terms = []
                    for critic, opt_d in zip(critics, opt_ds):
                        opt_d.zero_grad()
                        norms = gradient_norms(critic, real, fake, generator=self.rng)
                        d_loss, _ = wgan_gp_losses(critic(real), critic(fake), norms, cfg.gp_weight)
                        d_loss.backward()
                        opt_d.step()
                        d_terms.append(d_loss.detach())
                    d_total = self._combine(d_terms).item()
                    self._check_finite(stage, iteration, d_loss=d_total)

                for _ in range(cfg.g_steps):
                    opt_g.zero_grad()
                    fake = generator(noise, stage)
                    g_adv = self._combine([-critic(fake).mean() for critic in critics])
                    rec = reconstruction_loss(generator(rec_noise, stage), real)
                    (g_adv + cfg.rec_weight * rec).backward()
                    opt_g.step()
                    g_adv_value, rec_value = g_adv.detach().item(), rec.detach().item()
                    self._check_finite(stage, iteration, g_adv=g_adv_value, rec=rec_value)

                history.append(
                    LossRecord(
                        iteration=iteration,
                        stage=stage,
                        d_loss=d_total,
                        g_adv=g_adv_value,
                        rec=rec_value,
                    )
                )
                progress.advance(task)


def train(
    layers: AudioLayerSet,
    cfg: TrainConfig,
    output_dir: Optional[Path] = None,
    verbose: bool = True,
) -> Checkpoint:
    """Train on `layers` with `cfg`; see ProgressiveTrainer."""
    return ProgressiveTrainer(cfg, output_dir=output_dir, verbose=verbose).train(layers)
