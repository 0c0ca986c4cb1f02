"""Benchmark drivers, error norms and reference data."""
from .norms import (convergence_rate, l2_norm, l2_space_error, l2_spacetime_error,
                    l2_spacetime_norm, mean_shift_pressure, weighted_profile_error)
from .report import ErrorReport
from .taylor_green import TaylorGreenParams, run_taylor_green, taylor_green_exact
from .truncation import perturbed_lattice, truncation_error_study
from .profiles import ReferenceProfile, load_reference_profile, ghia_profile
