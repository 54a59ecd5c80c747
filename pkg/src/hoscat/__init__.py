"""Scattering geometry and wavefront propagation for perturbed harmonic oscillators."""

__version__ = "0.1.0"
