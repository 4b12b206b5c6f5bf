import shutil

import numpy as np
import pytest
import torch

from sfxgan.core.config import SynthesisParams
from sfxgan.core.errors import CheckpointError
from sfxgan.core.models import LossRecord
from sfxgan.generators.networks import BLOCKS_PER_STAGE
from sfxgan.generators.synthesis import synthesize_batch
from sfxgan.utils.checkpoint import Checkpoint, read_history, summarize_history, write_history

from .conftest import untrained_checkpoint


def test_round_trip_reproduces_the_reconstruction(tmp_path):
    ckpt = untrained_checkpoint()

    loaded = Checkpoint.load(ckpt.save(tmp_path / "checkpoint"))

    assert loaded.manifest == ckpt.manifest
    assert loaded.history == ckpt.history
    assert torch.equal(loaded.reconstruct().data, ckpt.reconstruct().data)
    for a, b in zip(loaded.discriminators[1].parameters(), ckpt.discriminators[1].parameters()):
        assert torch.equal(a, b)


def test_reloaded_checkpoint_synthesises_identical_audio(tmp_path):
    ckpt = untrained_checkpoint(stages=2)
    loaded = Checkpoint.load(ckpt.save(tmp_path / "checkpoint"))
    params = SynthesisParams(num_variations=3, gl_iters=2, seed=21)

    before = synthesize_batch(ckpt, params)
    after = synthesize_batch(loaded, params)

    for a, b in zip(before, after):
        np.testing.assert_array_equal(a.mix, b.mix)
        assert a.num_frames == b.num_frames


def test_layout_on_disk(tmp_path):
    path = untrained_checkpoint(stages=2).save(tmp_path / "checkpoint")

    names = sorted(p.name for p in path.iterdir())

    assert names == [
        "discriminator_1.pt",
        "discriminator_2.pt",
        "generator_head.pt",
        "generator_stage_00.pt",
        "generator_stage_01.pt",
        "generator_tail.pt",
        "loss_history.csv",
        "manifest.json",
        "reconstruction_noise.pt",
    ]


def test_saving_again_replaces_the_previous_checkpoint(tmp_path):
    target = tmp_path / "checkpoint"
    untrained_checkpoint(stages=3).save(target)

    untrained_checkpoint(stages=2).save(target)

    assert Checkpoint.load(target).manifest.completed_stages == 2
    assert not (target / "generator_stage_02.pt").exists()
    assert [p.name for p in tmp_path.iterdir()] == ["checkpoint"]


def test_missing_blob_is_named(tmp_path):
    path = untrained_checkpoint().save(tmp_path / "checkpoint")
    (path / "generator_tail.pt").unlink()

    with pytest.raises(CheckpointError, match="generator_tail.pt"):
        Checkpoint.load(path)


def test_corrupt_manifest(tmp_path):
    path = untrained_checkpoint().save(tmp_path / "checkpoint")
    (path / "manifest.json").write_text("{not json")

    with pytest.raises(CheckpointError, match="manifest.json"):
        Checkpoint.load(path)


def test_missing_directory(tmp_path):
    with pytest.raises(CheckpointError):
        Checkpoint.load(tmp_path / "nowhere")


def test_mismatched_blob(tmp_path):
    path = untrained_checkpoint(filters=8).save(tmp_path / "a")
    other = untrained_checkpoint(filters=16).save(tmp_path / "b")
    shutil.copy(other / "generator_head.pt", path / "generator_head.pt")

    with pytest.raises(CheckpointError, match="generator_head.pt"):
        Checkpoint.load(path)


def test_parameter_counts_grow_by_one_stage_at_a_time():
    for filters in (64, 128):
        counts = untrained_checkpoint(filters=filters, stages=10).parameter_counts()
        per_stage = BLOCKS_PER_STAGE * (filters * filters * 9 + filters + 2 * filters)

        assert len(counts) == 10
        assert all(b - a == per_stage for a, b in zip(counts, counts[1:]))


def test_history_csv_keeps_full_precision(tmp_path):
    history = [
        LossRecord(iteration=i, stage=i // 2, d_loss=0.1 * i, g_adv=-1.0 / 3, rec=2.0 / 7)
        for i in range(4)
    ]

    assert read_history(write_history(history, tmp_path / "h.csv")) == history


def test_summarize_history():
    history = [
        LossRecord(iteration=i, stage=s, d_loss=1.0, g_adv=0.0, rec=1.0 / (i + 1))
        for s in (0, 1)
        for i in range(3)
    ]

    summary = summarize_history(history)

    assert summary[1]["first_rec"] == 1.0
    assert summary[1]["last_rec"] == pytest.approx(1.0 / 3)
    assert summary[0]["iterations"] == 3
