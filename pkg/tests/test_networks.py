import pytest
import torch

from sfxgan.core.errors import ShapeMismatchError
from sfxgan.core.models import NoiseMapSet
from sfxgan.generators.networks import (
    BLOCKS_PER_STAGE,
    GrowingGenerator,
    PatchDiscriminator,
    count_parameters,
    init_weights,
)


def _noise(gen: GrowingGenerator, shapes, batch: int = 1) -> NoiseMapSet:
    maps = [torch.randn(batch, gen.noise_channels(i), *s) for i, s in enumerate(shapes)]
    return NoiseMapSet(maps=maps, amplitudes=[1.0] + [0.1] * (len(shapes) - 1))


def test_hidden_blocks_grow_by_three_per_stage():
    gen = GrowingGenerator(2, filters=8)
    counts = [gen.hidden_block_count()]
    for _ in range(9):
        gen.add_stage()
        counts.append(gen.hidden_block_count())

    assert counts == [4 + 3 * n for n in range(10)]


@pytest.mark.parametrize("filters", [64, 128])
def test_parameters_per_stage_match_three_conv_blocks(filters):
    gen = GrowingGenerator(2, filters=filters, kernel_size=3)
    before = count_parameters([gen])

    gen.add_stage()

    conv = filters * filters * 9 + filters
    batch_norm = 2 * filters
    assert count_parameters([gen]) - before == BLOCKS_PER_STAGE * (conv + batch_norm)


def test_output_shape_follows_the_noise():
    gen = GrowingGenerator(2, filters=8)
    gen.add_stage()

    out = gen(_noise(gen, [(20, 10), (40, 20)]))
    wide = gen(_noise(gen, [(20, 12), (40, 24)]))

    assert out.shape == (1, 2, 40, 20)
    assert wide.shape == (1, 2, 40, 24)


def test_lower_stage_output():
    gen = GrowingGenerator(3, filters=8)
    gen.add_stage()

    out = gen(_noise(gen, [(20, 10), (40, 20)]), stage=0)

    assert out.shape == (1, 3, 20, 10)


def test_missing_noise_map_is_rejected():
    gen = GrowingGenerator(2, filters=8)
    gen.add_stage()

    with pytest.raises(ShapeMismatchError):
        gen(_noise(gen, [(20, 10)]), stage=1)


def test_noise_channel_mismatch_is_rejected():
    gen = GrowingGenerator(2, filters=8)
    bad = NoiseMapSet(maps=[torch.randn(1, 3, 20, 10)], amplitudes=[1.0])

    with pytest.raises(ShapeMismatchError):
        gen(bad)


def test_discriminators_agree_on_output_shape():
    d1 = PatchDiscriminator(3, filters=8, dilation=1)
    d2 = PatchDiscriminator(3, filters=8, dilation=3)
    x = torch.randn(2, 3, 40, 30)

    assert d1(x).shape == d2(x).shape == (6, 1, 40, 30)


def test_channels_are_stacked_along_the_batch_axis():
    critic = PatchDiscriminator(3, filters=8)
    seen = {}

    def record(module, inputs, output):
        seen["batch"] = inputs[0].shape[0]

    critic.body.register_forward_hook(record)

    critic(torch.randn(2, 3, 16, 16))

    assert seen["batch"] == 6


def test_discriminator_rejects_wrong_channel_count():
    with pytest.raises(ShapeMismatchError):
        PatchDiscriminator(2, filters=8)(torch.randn(1, 3, 16, 16))


def _gradient_extent(critic: PatchDiscriminator, size: int = 81) -> int:
    """Width of the input region that influences the centre output unit."""
    critic.apply(init_weights)
    x = torch.randn(1, 1, size, size, requires_grad=True)
    out = critic(x)
    out[0, 0, size // 2, size // 2].backward()
    rows = torch.nonzero(x.grad[0, 0].abs().sum(dim=1))
    return int(rows.max() - rows.min() + 1)


@pytest.mark.parametrize("dilation,expected", [(1, 11), (3, 31)])
def test_receptive_field(dilation, expected):
    torch.manual_seed(0)
    critic = PatchDiscriminator(1, filters=8, dilation=dilation)

    assert critic.receptive_field == expected
    assert _gradient_extent(critic) == expected


def test_stage_modules_partition_the_generator():
    gen = GrowingGenerator(2, filters=8)
    gen.add_stage()
    gen.add_stage()

    owned = count_parameters([m for s in range(3) for m in gen.stage_modules(s)])

    assert owned + count_parameters([gen.tail]) == count_parameters([gen])


def test_dilation_changes_no_weight_shapes():
    d1 = PatchDiscriminator(2, filters=8, dilation=1)
    d2 = PatchDiscriminator(2, filters=8, dilation=2)

    shapes = [p.shape for p in d1.parameters()]

    assert shapes == [p.shape for p in d2.parameters()]
    assert not any(isinstance(m, torch.nn.BatchNorm2d) for m in d1.modules())


def test_deeper_critic_body_widens_the_receptive_field():
    torch.manual_seed(0)
    critic = PatchDiscriminator(1, filters=8, groups=4)

    assert critic.receptive_field == 13
    assert _gradient_extent(critic) == 13


def test_generator_output_is_not_squashed():
    torch.manual_seed(0)
    gen = GrowingGenerator(2, filters=8)
    gen.add_stage()
    noise = _noise(gen, [(20, 10), (40, 20)])
    out = gen(noise).detach()

    with torch.no_grad():
        gen.tail.weight.mul_(100.0)
        gen.tail.bias.mul_(100.0)
    scaled = gen(noise).detach()

    torch.testing.assert_close(scaled, 100.0 * out)
    assert float(scaled.abs().max()) > 1.0
