"""Discrete fractional Sobolev energies, Coulomb gauges and Wente estimates on the disk."""

__version__ = "0.1.0"
