"""sfxgan - single-example spectrogram GAN for one-shot sound effect variations."""

__version__ = "0.1.0"
