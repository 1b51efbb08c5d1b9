"""Harmonic balance solver and direct resonance-curve tracing."""

__version__ = "0.1.0"
