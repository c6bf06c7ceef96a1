"""Entanglement-distribution scheduling for polar satellite constellations."""

__version__ = "0.1.0"
