"""Per-category training presets for the supported sound effect families."""

from enum import Enum
from typing import Dict


class Preset(str, Enum):
    """Sound effect category a training run is tuned for."""

    FOOTSTEPS_CONCRETE = "footsteps-concrete"
    FOOTSTEPS_METAL = "footsteps-metal"
    GUNSHOT = "gunshot"
    CHARACTER_JUMP = "character-jump"
    CUSTOM = "custom"


# Knobs every run must pin down; `custom` has to state all of them.
PRESET_KNOBS = ("iters_per_stage", "filters", "d2_dilation", "min_size")

PRESETS: Dict[Preset, Dict[str, int]] = {
    Preset.FOOTSTEPS_CONCRETE: {
        "iters_per_stage": 2000,
        "filters": 64,
        "d2_dilation": 3,
        "min_size": 50,
    },
    Preset.FOOTSTEPS_METAL: {
        "iters_per_stage": 2000,
        "filters": 64,
        "d2_dilation": 3,
        "min_size": 50,
    },
    Preset.GUNSHOT: {
        "iters_per_stage": 8000,
        "filters": 128,
        "d2_dilation": 2,
        "min_size": 11,
    },
    Preset.CHARACTER_JUMP: {
        "iters_per_stage": 8000,
        "filters": 128,
        "d2_dilation": 3,
        "min_size": 25,
    },
}


def preset_values(preset: Preset) -> Dict[str, int]:
    """
    Get the hyperparameters a preset pins.

    Args:
        preset: Category preset

    Returns:
        Copy of the preset's knob values (empty for `custom`)
    """
    return dict(PRESETS.get(preset, {}))
