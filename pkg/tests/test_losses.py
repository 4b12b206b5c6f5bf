import pytest
import torch
import torch.nn as nn

from sfxgan.core.errors import ShapeMismatchError
from sfxgan.generators.losses import gradient_norms, reconstruction_loss, wgan_gp_losses


class Linear(nn.Module):
    """Critic with a known input gradient: score = sum(w * x)."""

    def __init__(self, weight: torch.Tensor):
        super().__init__()
        self.weight = nn.Parameter(weight)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return (x * self.weight).sum(dim=(1, 2, 3))


def test_wgan_gp_terms():
    d_real = torch.tensor([1.0, 3.0])
    d_fake = torch.tensor([-1.0, 0.0])
    norms = torch.tensor([1.0, 3.0])

    d_loss, g_adv = wgan_gp_losses(d_real, d_fake, norms, gp_weight=10.0)

    # mean(fake) - mean(real) + 10 * mean((n - 1)^2) = -0.5 - 2 + 10 * 2
    assert float(d_loss) == pytest.approx(17.5)
    assert float(g_adv) == pytest.approx(0.5)


def test_gradient_norm_of_a_linear_critic():
    weight = torch.full((1, 2, 3, 3), 0.5)
    critic = Linear(weight)
    real = torch.randn(4, 2, 3, 3)
    fake = torch.randn(4, 2, 3, 3)

    norms = gradient_norms(critic, real, fake, generator=torch.Generator().manual_seed(0))

    expected = torch.linalg.vector_norm(weight)
    torch.testing.assert_close(norms, expected.expand(4))


def test_gradient_penalty_is_differentiable():
    critic = nn.Sequential(nn.Conv2d(2, 4, 3, padding=1), nn.LeakyReLU(0.05), nn.Conv2d(4, 1, 1))
    real = torch.randn(2, 2, 8, 8)
    fake = torch.randn(2, 2, 8, 8)

    penalty = ((gradient_norms(critic, real, fake) - 1) ** 2).mean()
    penalty.backward()

    # Biases shift the critic but not its input gradient.
    for layer in (critic[0], critic[2]):
        assert layer.weight.grad is not None
        assert float(layer.weight.grad.abs().sum()) > 0


def test_reconstruction_loss_is_mse():
    real = torch.zeros(1, 2, 4, 4)
    generated = torch.full((1, 2, 4, 4), 2.0)

    assert float(reconstruction_loss(generated, real)) == pytest.approx(4.0)


def test_reconstruction_shape_mismatch():
    with pytest.raises(ShapeMismatchError):
        reconstruction_loss(torch.zeros(1, 2, 4, 4), torch.zeros(1, 2, 4, 5))


def test_identical_scores_with_unit_gradients_cancel():
    scores = torch.randn(3, 1, 5, 5)

    d_loss, _ = wgan_gp_losses(scores, scores.clone(), torch.ones(3))

    assert float(d_loss) == pytest.approx(0.0, abs=1e-6)


def test_zero_gradient_norms_cost_the_full_penalty():
    zeros = torch.zeros(2, 1, 4, 4)

    d_loss, _ = wgan_gp_losses(zeros, zeros, torch.zeros(2), gp_weight=10.0)

    assert float(d_loss) == pytest.approx(10.0)


def test_reconstruction_loss_matches_elementwise_mean():
    generated = torch.randn(1, 3, 7, 9)
    real = torch.randn(1, 3, 7, 9)

    expected = ((generated - real) ** 2).sum() / generated.numel()

    torch.testing.assert_close(reconstruction_loss(generated, real), expected)
