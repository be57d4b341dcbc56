"""Simulation and analysis of a nondegenerate polarization-entangled photon-pair source."""
from . import analysis, counts, polcalc, source, teleport
from ._kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["analysis", "counts", "polcalc", "source", "teleport", "BACKEND"]
