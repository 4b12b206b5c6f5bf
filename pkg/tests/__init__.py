"""Tests for sfxgan."""
