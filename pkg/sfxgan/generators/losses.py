"""WGAN-GP adversarial losses and the reconstruction loss."""

from typing import Optional, Tuple

import torch
import torch.nn as nn
import torch.nn.functional as F

from sfxgan.core.errors import ShapeMismatchError


def wgan_gp_losses(
    d_real: torch.Tensor,
    d_fake: torch.Tensor,
    grad_norms: torch.Tensor,
    gp_weight: float = 10.0,
) -> Tuple[torch.Tensor, torch.Tensor]:
    """
    Critic and generator adversarial losses.

    Args:
        d_real: Critic patch scores of real inputs
        d_fake: Critic patch scores of generated inputs
        grad_norms: Per-sample critic gradient norms at real/fake interpolates
        gp_weight: Gradient penalty weight

    Returns:
        Tuple of (d_loss, g_adv_loss)
    """
    penalty = ((grad_norms - 1.0) ** 2).mean()
    d_loss = d_fake.mean() - d_real.mean() + gp_weight * penalty
    g_adv_loss = -d_fake.mean()
    return d_loss, g_adv_loss


def gradient_norms(
    critic: nn.Module,
    real: torch.Tensor,
    fake: torch.Tensor,
    generator: Optional[torch.Generator] = None,
) -> torch.Tensor:
    """
    L2 norm of the critic's input gradient at random real/fake interpolates.

    One interpolation coefficient is drawn per sample; the graph is kept so
    the penalty can be backpropagated.

    Returns:
        (B,) tensor of gradient norms
    """
    alpha = torch.rand(real.shape[0], 1, 1, 1, generator=generator).to(real.device, real.dtype)
    interpolates = (alpha * real + (1 - alpha) * fake).detach().requires_grad_(True)
    scores = critic(interpolates)
    (grads,) = torch.autograd.grad(
        outputs=scores,
        inputs=interpolates,
        grad_outputs=torch.ones_like(scores),
        create_graph=True,
        retain_graph=True,
    )
    return grads.reshape(grads.shape[0], -1).norm(2, dim=1)


def reconstruction_loss(generated: torch.Tensor, real: torch.Tensor) -> torch.Tensor:
    """Mean squared error between the fixed-noise output and the real stage spectrogram."""
    if generated.shape != real.shape:
        raise ShapeMismatchError(
            f"Reconstruction shape {tuple(generated.shape)} does not match real "
            f"{tuple(real.shape)}"
        )
    return F.mse_loss(generated, real)
