"""Audio and spectrogram processing."""
