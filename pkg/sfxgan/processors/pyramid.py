"""Coarse-to-fine spectrogram pyramid driving progressive training."""

import math
from typing import List, Tuple

import torch
import torch.nn.functional as F

from sfxgan.core.errors import PyramidError
from sfxgan.core.models import MultiChannelSpectrogram, PyramidSpec

SIZE_AXES = ("shorter", "time", "frequency")


def round_half_up(value: float) -> int:
    return int(math.floor(value + 0.5))


def stage_size(min_size: int, max_size: int, stage: int, num_stages: int) -> int:
    """Reference-axis size at `stage` on the geometric min -> max schedule."""
    ratio = max_size / min_size
    return round_half_up(min_size * ratio ** (stage / (num_stages - 1)))


def plan_pyramid(
    shape: Tuple[int, int],
    num_stages: int = 10,
    min_size: int = 25,
    size_axis: str = "shorter",
) -> PyramidSpec:
    """
    Compute per-stage (F, T) shapes for a spectrogram of spatial `shape`.

    The reference axis grows geometrically from `min_size` to its original
    size; the other axis follows with the same scale factor.

    Args:
        shape: (F, T) of the full-resolution spectrogram
        num_stages: Number of stages (>= 2)
        min_size: Stage-0 size of the reference axis
        size_axis: "shorter", "time" or "frequency"

    Returns:
        PyramidSpec whose last shape equals `shape`

    Raises:
        PyramidError: If the schedule is impossible
    """
    if num_stages < 2:
        raise PyramidError(f"num_stages must be >= 2, got {num_stages}")
    if size_axis not in SIZE_AXES:
        raise PyramidError(f"size_axis must be one of {SIZE_AXES}, got {size_axis!r}")
    freq, time = shape
    if min_size < 1 or min_size > min(freq, time):
        raise PyramidError(
            f"min_size {min_size} must be between 1 and the shorter side {min(freq, time)}"
        )

    if size_axis == "time" or (size_axis == "shorter" and time <= freq):
        ref_axis = 1
    else:
        ref_axis = 0
    max_size = shape[ref_axis]

    shapes: List[Tuple[int, int]] = []
    for stage in range(num_stages):
        ref = stage_size(min_size, max_size, stage, num_stages)
        scale = ref / max_size
        sizes = [max(1, round_half_up(dim * scale)) for dim in shape]
        sizes[ref_axis] = ref
        shapes.append((sizes[0], sizes[1]))
    shapes[-1] = (freq, time)

    return PyramidSpec(
        num_stages=num_stages,
        min_size=min_size,
        max_size=max_size,
        size_axis=size_axis,
        per_stage_shapes=shapes,
    )


def resize(data: torch.Tensor, size: Tuple[int, int]) -> torch.Tensor:
    """Bilinearly resample the last two axes of a (C, F, T) or (B, C, F, T) tensor."""
    if tuple(data.shape[-2:]) == tuple(size):
        return data
    batched = data if data.dim() == 4 else data.unsqueeze(0)
    out = F.interpolate(batched, size=size, mode="bilinear", align_corners=False)
    return out if data.dim() == 4 else out.squeeze(0)


def build_pyramid(spec: MultiChannelSpectrogram, pspec: PyramidSpec) -> List[torch.Tensor]:
    """
    Resample the training spectrogram to every stage shape.

    Returns:
        One C x F_n x T_n tensor per stage, coarse to fine; the last is an
        untouched copy of the input
    """
    if pspec.per_stage_shapes[-1] != (spec.data.shape[1], spec.data.shape[2]):
        raise PyramidError(
            f"Pyramid ends at {pspec.per_stage_shapes[-1]} but the spectrogram is "
            f"{tuple(spec.data.shape[1:])}"
        )
    levels = [resize(spec.data, shape) for shape in pspec.per_stage_shapes[:-1]]
    levels.append(spec.data.clone())
    return levels
