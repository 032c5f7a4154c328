"""Fourier-side laboratory for u_tt - Δu + Δ²u_t = 0."""

__version__ = "0.1.0"
