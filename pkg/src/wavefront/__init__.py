"""Spreading speeds and traveling waves for shifting-habitat and nonlocal growth models."""

__version__ = "0.1.0"
