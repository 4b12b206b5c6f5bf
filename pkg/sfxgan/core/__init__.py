"""Core configuration, models and workflows."""
