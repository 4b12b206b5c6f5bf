"""Generate retargeted, layer-shuffled and mixed-down variations from a checkpoint."""

import math
from itertools import combinations
from typing import List, Sequence, Tuple

import numpy as np
import torch
from rich.console import Console

from sfxgan.core.config import StftParams, SynthesisParams
from sfxgan.core.models import AudioLayerSet, DiversityReport, NoiseMapSet, SynthesizedVariation
from sfxgan.processors.pyramid import resize, round_half_up
from sfxgan.processors.spectral import denormalize_and_invert, log_magnitude
from sfxgan.utils.checkpoint import Checkpoint

console = Console()


def retarget_bounds(length: int, fraction: float) -> Tuple[int, int]:
    """Inclusive [ceil((1 - r) T), floor((1 + r) T)] range of retargeted widths."""
    low = max(1, math.ceil((1 - fraction) * length - 1e-9))
    high = max(low, math.floor((1 + fraction) * length + 1e-9))
    return low, high


def retarget_length(length: int, multiplier: float, fraction: float) -> int:
    low, high = retarget_bounds(length, fraction)
    return min(high, max(low, round_half_up(length * multiplier)))


def retarget_shapes(
    shapes: Sequence[Tuple[int, int]], multiplier: float, fraction: float
) -> List[Tuple[int, int]]:
    """Stage shapes with the time axis scaled by `multiplier`."""
    return [(freq, retarget_length(time, multiplier, fraction)) for freq, time in shapes]


def draw_noise(
    ckpt: Checkpoint,
    shapes: Sequence[Tuple[int, int]],
    generator: torch.Generator,
    use_reconstruction_noise: bool = False,
) -> NoiseMapSet:
    """
    Noise maps at (possibly retargeted) stage shapes.

    The stage-0 map is drawn (or taken from the reconstruction noise) at its
    trained shape and resampled to the new width; finer maps are produced at
    the new shapes directly.
    """
    gen = ckpt.generator
    device = next(gen.parameters()).device
    maps = []
    for stage, shape in enumerate(shapes):
        if use_reconstruction_noise:
            maps.append(resize(ckpt.reconstruction_noise[stage], shape))
        elif stage == 0:
            base = torch.randn(1, gen.noise_channels(0), *ckpt.stage_shapes[0], generator=generator)
            maps.append(resize(base, shape).to(device))
        else:
            noise = torch.randn(1, gen.noise_channels(stage), *shape, generator=generator)
            maps.append(noise.to(device))
    return NoiseMapSet(maps=maps, amplitudes=list(ckpt.manifest.noise_amplitudes))


def mix_layers(
    layers: Sequence[np.ndarray], delays: Sequence[int], gains_db: Sequence[float]
) -> Tuple[List[np.ndarray], np.ndarray]:
    """
    Delay, scale and sum layers of possibly different lengths.

    Args:
        layers: Mono layers
        delays: Delay of each layer in samples
        gains_db: Gain of each layer in dB

    Returns:
        Tuple of (placed layers padded to the mix length, un-limited mix)
    """
    length = max(layer.shape[0] + delay for layer, delay in zip(layers, delays))
    placed = []
    for layer, delay, gain_db in zip(layers, delays, gains_db):
        track = np.zeros(length)
        track[delay : delay + layer.shape[0]] = layer * 10.0 ** (gain_db / 20.0)
        placed.append(track)
    return placed, np.sum(placed, axis=0)


def peak_limit(mix: np.ndarray) -> Tuple[np.ndarray, int]:
    """Hard-clip to [-1, 1] and report how many samples were clipped."""
    clipped = int(np.count_nonzero(np.abs(mix) > 1.0))
    return np.clip(mix, -1.0, 1.0), clipped


def synthesize_batch(ckpt: Checkpoint, params: SynthesisParams) -> List[SynthesizedVariation]:
    """
    Generate `params.num_variations` mixes.

    Each variation draws its own time-axis multiplier and noise, runs the
    generator at the final stage and inverts every channel with Griffin-Lim.
    Layers are then shuffled across the batch per channel, delayed, gained and
    summed into peak-limited mixes. Everything derives from `params.seed`.

    Args:
        ckpt: Trained checkpoint
        params: Synthesis controls

    Returns:
        One SynthesizedVariation per mix
    """
    seeds = np.random.SeedSequence(params.seed).spawn(params.num_variations + 1)
    post_rng = np.random.default_rng(seeds[0])
    variation_seeds = [int(s.generate_state(1)[0]) for s in seeds[1:]]
    fraction = params.retarget_fraction
    stage = ckpt.final_stage

    takes: List[AudioLayerSet] = []
    multipliers: List[float] = []
    frames: List[int] = []
    for seed in variation_seeds:
        rng = np.random.default_rng(seed)
        multiplier = float(rng.uniform(1 - fraction, 1 + fraction)) if fraction > 0 else 1.0
        shapes = retarget_shapes(ckpt.stage_shapes, multiplier, fraction)
        noise = draw_noise(
            ckpt,
            shapes,
            torch.Generator().manual_seed(seed),
            use_reconstruction_noise=params.use_reconstruction_noise,
        )
        with torch.no_grad():
            generated = ckpt.generator(noise, stage)[0]
        takes.append(denormalize_and_invert(ckpt.spectrogram(generated), params.gl_iters))
        multipliers.append(multiplier)
        frames.append(int(generated.shape[-1]))

    count = params.num_variations
    channels = ckpt.num_channels
    sources = [
        post_rng.permutation(count) if params.shuffle_layers else np.arange(count)
        for _ in range(channels)
    ]
    names = list(ckpt.manifest.layer_names)
    sample_rate = ckpt.manifest.sample_rate

    variations = []
    for i in range(count):
        picks = [int(sources[c][i]) for c in range(channels)]
        delays_ms = [float(post_rng.uniform(*params.delay_range_ms)) for _ in range(channels)]
        gains_db = [float(post_rng.uniform(*params.gain_range_db)) for _ in range(channels)]
        delays = [round_half_up(d * sample_rate / 1000.0) for d in delays_ms]
        placed, mix = mix_layers(
            [takes[src].layers[c] for c, src in enumerate(picks)], delays, gains_db
        )
        mix, clipped = peak_limit(mix)
        if clipped:
            console.print(f"[yellow]⚠[/yellow] Variation {i}: {clipped} samples peak-limited")
        variations.append(
            SynthesizedVariation(
                index=i,
                mix=mix,
                per_layer=AudioLayerSet(layers=placed, names=names, sample_rate=sample_rate),
                retarget_multiplier=multipliers[i],
                num_frames=frames[i],
                source_variations=picks,
                layer_multipliers=[multipliers[src] for src in picks],
                layer_num_frames=[frames[src] for src in picks],
                delays_ms=delays_ms,
                gains_db=gains_db,
                clipped_samples=clipped,
                seed=variation_seeds[i],
            )
        )
    return variations


def diversity_report(
    mixes: Sequence[np.ndarray], stft: StftParams, sample_rate: int
) -> DiversityReport:
    """
    Pairwise L2 distances between the log-magnitude spectrograms of `mixes`.

    Shorter clips are zero-padded to the longest before analysis.
    """
    length = max(max(m.shape[0] for m in mixes), stft.fft_size)
    specs = [log_magnitude(np.pad(m, (0, length - m.shape[0])), stft).flatten() for m in mixes]
    distances = [float(torch.linalg.vector_norm(a - b)) for a, b in combinations(specs, 2)]
    if not distances:
        distances = [0.0]
    return DiversityReport(
        mean_distance=float(np.mean(distances)),
        min_distance=min(distances),
        max_distance=max(distances),
        durations=[m.shape[0] / sample_rate for m in mixes],
        num_distinct_durations=len({m.shape[0] for m in mixes}),
    )
