"""Multi-channel log-magnitude spectrograms and Griffin-Lim inversion.

Frames are never centred or padded: a signal of L samples gives
1 + (L - fft_size) // hop frames, and T frames overlap-add back to
fft_size + (T - 1) * hop samples.
"""

from typing import Tuple, Union

import librosa
import numpy as np
import torch

from sfxgan.core.config import StftParams
from sfxgan.core.errors import SpectrogramError
from sfxgan.core.models import AudioLayerSet, MultiChannelSpectrogram

ArrayLike = Union[np.ndarray, torch.Tensor]


def _as_tensor(values: ArrayLike) -> torch.Tensor:
    if isinstance(values, np.ndarray):
        return torch.from_numpy(np.ascontiguousarray(values)).to(torch.float64)
    return values.detach().to("cpu", torch.float64)


def hann_window(params: StftParams) -> torch.Tensor:
    return torch.hann_window(params.fft_size, periodic=True, dtype=torch.float64)


def stft(audio: ArrayLike, params: StftParams) -> torch.Tensor:
    """
    Complex STFT of (..., L) audio as a (..., F, T) tensor.

    Raises:
        SpectrogramError: If the signal is shorter than one frame
    """
    audio = _as_tensor(audio)
    if audio.shape[-1] < params.fft_size:
        raise SpectrogramError(
            f"Signal of {audio.shape[-1]} samples is shorter than fft_size {params.fft_size}"
        )
    lead = audio.shape[:-1]
    spec = torch.stft(
        audio.reshape(-1, audio.shape[-1]),
        n_fft=params.fft_size,
        hop_length=params.hop,
        win_length=params.fft_size,
        window=hann_window(params),
        center=False,
        return_complex=True,
    )
    return spec.reshape(*lead, *spec.shape[-2:])


def istft(spec: torch.Tensor, params: StftParams) -> torch.Tensor:
    """Least-squares overlap-add inverse of `stft` for a (..., F, T) complex tensor."""
    if spec.shape[-2] != params.num_bins:
        raise SpectrogramError(f"Expected {params.num_bins} bins, got {spec.shape[-2]}")
    # torch.istft refuses a window whose squared sum vanishes at the edges when center=False.
    audio = librosa.istft(
        spec.detach().cpu().to(torch.complex128).numpy(),
        hop_length=params.hop,
        win_length=params.fft_size,
        n_fft=params.fft_size,
        window="hann",
        center=False,
    )
    return torch.from_numpy(audio)


def griffin_lim(magnitude: ArrayLike, params: StftParams, n_iter: int) -> torch.Tensor:
    """
    Recover audio whose STFT magnitude approximates `magnitude` (..., F, T).

    Classic alternating projections (no momentum) starting from zero phase.
    """
    if n_iter < 0:
        raise ValueError(f"n_iter must be >= 0, got {n_iter}")
    magnitude = _as_tensor(magnitude)
    if magnitude.shape[-2] != params.num_bins:
        raise SpectrogramError(f"Expected {params.num_bins} bins, got {magnitude.shape[-2]}")
    audio = librosa.griffinlim(
        magnitude.numpy(),
        n_iter=n_iter,
        hop_length=params.hop,
        win_length=params.fft_size,
        n_fft=params.fft_size,
        window="hann",
        center=False,
        momentum=0.0,
        init=None,
    )
    return torch.from_numpy(np.ascontiguousarray(audio))

def log_magnitude(audio: ArrayLike, params: StftParams) -> torch.Tensor:
    """Natural-log magnitude log(|STFT| + log_epsilon), unnormalised."""
    return torch.log(stft(audio, params).abs() + params.log_epsilon)


def normalize(log_mag: torch.Tensor) -> Tuple[torch.Tensor, float, float]:
    """Scale to zero mean and unit (population) std over every entry."""
    values = log_mag.to(torch.float64)
    mean = float(values.mean())
    std = float(values.std(correction=0))
    if not std > 0:
        raise SpectrogramError("Spectrogram is constant and cannot be normalised")
    return (values - mean) / std, mean, std


def denormalize(data: torch.Tensor, norm_mean: float, norm_std: float) -> torch.Tensor:
    return data.to(torch.float64) * norm_std + norm_mean


def stft_log_magnitude(layers: AudioLayerSet, params: StftParams) -> MultiChannelSpectrogram:
    """
    Build the normalised C x F x T log-magnitude spectrogram of a layer set.

    Args:
        layers: Aligned training layers
        params: STFT parameters

    Returns:
        MultiChannelSpectrogram with its normalisation statistics
    """
    if layers.length < params.fft_size:
        raise SpectrogramError(
            f"Layers are {layers.length} samples long; at least {params.fft_size} are needed"
        )
    data, mean, std = normalize(log_magnitude(layers.as_array(), params))
    return MultiChannelSpectrogram(
        data=data.to(torch.float32),
        norm_mean=mean,
        norm_std=std,
        stft=params,
        layer_names=list(layers.names),
        sample_rate=layers.sample_rate,
    )


def to_magnitude(spec: MultiChannelSpectrogram) -> torch.Tensor:
    """Undo normalisation and the log, flooring magnitudes at zero."""
    if not torch.isfinite(spec.data).all():
        raise SpectrogramError("Spectrogram contains non-finite values")
    log_mag = denormalize(spec.data, spec.norm_mean, spec.norm_std)
    return (torch.exp(log_mag) - spec.stft.log_epsilon).clamp_min(0.0)


def denormalize_and_invert(spec: MultiChannelSpectrogram, gl_iters: int = 60) -> AudioLayerSet:
    """
    Turn a (generated) spectrogram back into one audio layer per channel.

    Args:
        spec: Normalised spectrogram with valid statistics
        gl_iters: Griffin-Lim iterations

    Returns:
        AudioLayerSet of fft_size + (T - 1) * hop samples per layer
    """
    audio = griffin_lim(to_magnitude(spec), spec.stft, gl_iters)
    return AudioLayerSet(
        layers=[channel.numpy() for channel in audio],
        names=list(spec.layer_names),
        sample_rate=spec.sample_rate,
    )


def spectral_consistency(magnitude: ArrayLike, audio: ArrayLike, params: StftParams) -> float:
    """
    Relative distance between |STFT(audio)| and a target magnitude.

    Returns:
        ||(|STFT(audio)| - magnitude)||_F / ||magnitude||_F

    Raises:
        SpectrogramError: On shape mismatch or an all-zero target
    """
    magnitude = _as_tensor(magnitude)
    rebuilt = stft(audio, params).abs()
    if rebuilt.shape != magnitude.shape:
        raise SpectrogramError(
            f"STFT of audio has shape {tuple(rebuilt.shape)}, "
            f"magnitude has {tuple(magnitude.shape)}"
        )
    reference = torch.linalg.vector_norm(magnitude)
    if reference == 0:
        raise SpectrogramError("Target magnitude is all zeros")
    return float(torch.linalg.vector_norm(rebuilt - magnitude) / reference)
