"""Functional tensor network solver for coupled harmonic oscillators."""

__version__ = "1.0.0"
