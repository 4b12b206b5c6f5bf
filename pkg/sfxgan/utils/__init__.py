"""Checkpoint and preset utilities."""
