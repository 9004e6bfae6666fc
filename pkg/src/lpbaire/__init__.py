"""Effective Baire category on L^p step-function spaces, Banach-Mazur games,
and a desk-scale construction of Fourier series that diverge almost everywhere."""

__version__ = "0.1.0"
