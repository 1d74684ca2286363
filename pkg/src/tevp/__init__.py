"""Transmission eigenvalues, surface-localized eigenmodes and invisibility
for the acoustic interior transmission problem via boundary integrals."""
__version__ = "0.1.0"
