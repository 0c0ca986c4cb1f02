"""Explicit penalty-based particle method for incompressible flow.

Generalized particle operators with selectable reference weights, an
explicit six-step solver, and benchmark drivers (Taylor-Green vortex,
truncation error, lid-driven cavity, dam break).
"""
from .core import (ConfigurationError, DomainSpec, NeighborList, ParticleKind, ParticleSystem,
                   build_neighbor_list, lattice_init)
from .weights import ReferenceWeight, WeightTriple, preset_triple
from .operators import OperatorSet, c0h
from .solver import InstabilityError, Solver, SolverConfig, dt_max

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError", "DomainSpec", "NeighborList", "ParticleKind", "ParticleSystem",
    "build_neighbor_list", "lattice_init", "ReferenceWeight", "WeightTriple", "preset_triple",
    "OperatorSet", "c0h", "InstabilityError", "Solver", "SolverConfig", "dt_max",
]
