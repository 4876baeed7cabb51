"""Numerical laboratory for lattice step distributions, walks, percolation,
Ising, and the associated diagram and inequality machinery."""

__version__ = "0.1.0"

from .steps import ConditionReport, StepDistribution, ising_tau, verify_conditions
from .torus import TorusField, TorusGrid, convolve, delta_k, dft, idft

__all__ = [
    "__version__",
    "StepDistribution", "ConditionReport", "verify_conditions", "ising_tau",
    "TorusGrid", "TorusField", "dft", "idft", "convolve", "delta_k",
]
