import math
from collections import Counter

import numpy as np
import pytest
import torch

from sfxgan.core.config import StftParams, SynthesisParams
from sfxgan.generators.synthesis import (
    diversity_report,
    mix_layers,
    peak_limit,
    retarget_bounds,
    retarget_length,
    synthesize_batch,
)
from sfxgan.processors.spectral import denormalize_and_invert, log_magnitude

from .conftest import SAMPLE_RATE, decaying_tone, untrained_checkpoint


def test_retarget_bounds():
    assert retarget_bounds(65, 0.15) == (math.ceil(0.85 * 65), math.floor(1.15 * 65))
    assert retarget_bounds(65, 0.0) == (65, 65)
    assert retarget_bounds(100, 0.15) == (85, 115)


@pytest.mark.parametrize("multiplier", [0.85, 0.9, 1.0, 1.07, 1.15])
def test_retarget_length_stays_in_bounds(multiplier):
    low, high = retarget_bounds(65, 0.15)

    assert low <= retarget_length(65, multiplier, 0.15) <= high


def test_impulse_mix_is_peak_limited():
    impulse = np.zeros(100)
    impulse[10] = 1.0

    placed, mix = mix_layers([impulse, 0.5 * impulse], delays=[0, 0], gains_db=[0.0, 0.0])
    limited, clipped = peak_limit(mix)

    assert mix[10] == pytest.approx(1.5)
    assert limited[10] == 1.0
    assert clipped == 1
    assert np.max(np.abs(limited)) <= 1.0


def test_delay_shifts_and_extends_the_mix():
    impulse = np.zeros(50)
    impulse[0] = 0.5

    placed, mix = mix_layers([impulse, impulse], delays=[0, 20], gains_db=[0.0, 0.0])

    assert mix.shape[0] == 70
    assert placed[1][20] == pytest.approx(0.5)
    assert mix[0] == pytest.approx(0.5) and mix[20] == pytest.approx(0.5)


def test_gain_is_linear_in_db():
    tone = 0.5 * decaying_tone(440.0, duration=0.01)

    _, quiet = mix_layers([tone], delays=[0], gains_db=[-6.0])

    np.testing.assert_allclose(quiet, tone * 10 ** (-6.0 / 20.0))


def test_diversity_of_identical_clips_is_zero():
    clip = decaying_tone(300.0)

    report = diversity_report([clip, clip.copy(), clip.copy()], StftParams(), SAMPLE_RATE)

    assert report.mean_distance == 0.0
    assert report.num_distinct_durations == 1


def test_diversity_pads_clips_of_different_lengths():
    report = diversity_report(
        [decaying_tone(300.0, duration=0.1), decaying_tone(300.0, duration=0.2)],
        StftParams(),
        SAMPLE_RATE,
    )

    assert report.min_distance > 0
    assert report.num_distinct_durations == 2


def test_distance_of_clips_differing_in_one_frame():
    rng = np.random.default_rng(4)
    first = rng.standard_normal(8820)
    second = first.copy()
    # Only frame 0 covers the first hop of samples.
    second[:64] += rng.standard_normal(64)
    params = StftParams()

    report = diversity_report([first, second], params, SAMPLE_RATE)

    column = log_magnitude(first, params)[:, 0] - log_magnitude(second, params)[:, 0]
    assert report.mean_distance == pytest.approx(float(torch.linalg.vector_norm(column)))


def test_reconstruction_noise_reproduces_the_reconstruction():
    ckpt = untrained_checkpoint(stages=2)
    params = SynthesisParams(
        num_variations=1,
        retarget_fraction=0.0,
        shuffle_layers=False,
        delay_range_ms=(0.0, 0.0),
        gain_range_db=(0.0, 0.0),
        gl_iters=3,
        use_reconstruction_noise=True,
    )

    (variation,) = synthesize_batch(ckpt, params)
    expected = denormalize_and_invert(ckpt.reconstruct(), gl_iters=3)

    for got, want in zip(variation.per_layer.layers, expected.layers):
        np.testing.assert_allclose(got, want)


def test_same_seed_same_batch():
    ckpt = untrained_checkpoint(stages=2)
    params = SynthesisParams(num_variations=3, gl_iters=2, seed=11)

    first = synthesize_batch(ckpt, params)
    second = synthesize_batch(ckpt, params)

    for a, b in zip(first, second):
        np.testing.assert_array_equal(a.mix, b.mix)
        assert a.source_variations == b.source_variations
        assert a.delays_ms == b.delays_ms


def test_untrained_checkpoint_retargets_within_bounds():
    ckpt = untrained_checkpoint(stages=2)
    frames = ckpt.stage_shapes[-1][1]
    low, high = retarget_bounds(frames, 0.15)

    variations = synthesize_batch(ckpt, SynthesisParams(num_variations=6, gl_iters=0, seed=3))

    assert all(low <= v.num_frames <= high for v in variations)
    for v in variations:
        assert v.per_layer.length == v.mix.shape[0]
        assert 0.85 <= v.retarget_multiplier <= 1.15
        assert all(0.0 <= d <= 30.0 for d in v.delays_ms)
        assert all(-3.0 <= g <= 0.0 for g in v.gains_db)


@pytest.mark.slow
def test_retargeting_contract_on_the_smoke_checkpoint(smoke_checkpoint):
    frames = smoke_checkpoint.stage_shapes[-1][1]
    low, high = retarget_bounds(frames, 0.15)

    wide = synthesize_batch(smoke_checkpoint, SynthesisParams(num_variations=100, gl_iters=0))
    fixed = synthesize_batch(
        smoke_checkpoint,
        SynthesisParams(num_variations=5, retarget_fraction=0.0, gl_iters=0, seed=1),
    )

    assert all(low <= v.num_frames <= high for v in wide)
    assert all(v.num_frames == frames for v in fixed)
    stft = smoke_checkpoint.manifest.stft
    for v in wide:
        assert v.per_layer.length >= stft.signal_length(v.num_frames)


@pytest.mark.slow
def test_shuffling_uses_every_source_once_per_layer(smoke_checkpoint):
    count = 6
    params = SynthesisParams(num_variations=count, gl_iters=0, seed=5)

    variations = synthesize_batch(smoke_checkpoint, params)

    for channel in range(smoke_checkpoint.num_channels):
        sources = Counter(v.source_variations[channel] for v in variations)
        assert sources == Counter(range(count))


@pytest.mark.slow
def test_batch_is_diverse(smoke_checkpoint):
    variations = synthesize_batch(smoke_checkpoint, SynthesisParams(num_variations=10, seed=0))

    report = diversity_report(
        [v.mix for v in variations], smoke_checkpoint.manifest.stft, SAMPLE_RATE
    )

    assert report.min_distance > 0
    assert report.num_distinct_durations >= 3


def test_shuffled_layers_carry_their_source_take():
    ckpt = untrained_checkpoint(stages=2)

    variations = synthesize_batch(ckpt, SynthesisParams(num_variations=4, gl_iters=0, seed=8))

    for v in variations:
        for channel, source in enumerate(v.source_variations):
            assert v.layer_multipliers[channel] == variations[source].retarget_multiplier
            assert v.layer_num_frames[channel] == variations[source].num_frames
