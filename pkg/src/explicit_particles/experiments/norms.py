"""Discrete norms, relative errors and convergence-rate extraction."""
from __future__ import annotations

import math

import numpy as np


class UndefinedRelativeError(ZeroDivisionError):
    """Relative error requested against a zero reference."""


def l2_norm(phi, volumes) -> float:
    """(sum_j V_j |phi_j|^2)^(1/2); vector fields use the Euclidean |.|."""
    phi = np.asarray(phi, dtype=float)
    sq = phi * phi if phi.ndim == 1 else (phi * phi).sum(axis=1)
    return math.sqrt(float(np.dot(np.asarray(volumes, float), sq)))


def l2_space_error(numeric, exact, volumes, relative=True) -> float:
    """Volume-weighted l2 distance, divided by the exact norm when ``relative``."""
    err = l2_norm(np.asarray(numeric, float) - np.asarray(exact, float), volumes)
    if not relative:
        return err
    ref = l2_norm(exact, volumes)
    if ref == 0.0:
        raise UndefinedRelativeError("exact field has zero norm")
    return err / ref


def l2_spacetime_norm(space_norms, tau, squared=True) -> float:
    """Aggregate per-step space norms over time.

    ``squared=True``: (sum_k tau ||phi^k||^2)^(1/2), the usual l2-in-time
    norm. ``squared=False``: (sum_k tau ||phi^k||)^(1/2), the inner norm
    taken unsquared.
    """
    a = np.asarray(space_norms, dtype=float)
    inner = a * a if squared else a
    return math.sqrt(float(tau * inner.sum()))


def l2_spacetime_error(err_norms, exact_norms, tau, squared=True) -> float:
    """Relative space-time error from per-step error and reference norms."""
    den = l2_spacetime_norm(exact_norms, tau, squared)
    if den == 0.0:
        raise UndefinedRelativeError("exact history has zero norm")
    return l2_spacetime_norm(err_norms, tau, squared) / den


def mean_shift_pressure(pressures, volumes) -> np.ndarray:
    """p_i - sum_j V_j p_j (zero volume-weighted mean when sum V = 1)."""
    p = np.asarray(pressures, dtype=float)
    return p - float(np.dot(np.asarray(volumes, float), p))


def convergence_rate(e_coarse, e_fine, h_coarse, h_fine) -> float:
    """Observed order q in e ~ h^q from two refinements."""
    if min(e_coarse, e_fine, h_coarse, h_fine) <= 0 or h_coarse == h_fine:
        raise ValueError("errors and radii must be positive and distinct")
    return math.log(e_coarse / e_fine) / math.log(h_coarse / h_fine)


def weighted_profile_error(numeric, reference, abscissae) -> float:
    """Relative l2 error of a sampled profile with weights x_j - x_{j-1}
    (the first sample weighted by its distance from zero)."""
    x = np.asarray(abscissae, dtype=float)
    w = np.diff(np.concatenate(([0.0], x)))
    ref = np.asarray(reference, float)
    den = float(np.dot(w, ref * ref))
    if den == 0.0:
        raise UndefinedRelativeError("reference profile is identically zero")
    diff = np.asarray(numeric, float) - ref
    return math.sqrt(float(np.dot(w, diff * diff)) / den)


def time_l2_error(numeric, reference, dt) -> float:
    """Relative l2-in-time error with step weights dt (scalar or per step)."""
    dt = np.broadcast_to(np.asarray(dt, float), np.shape(numeric))
    ref = np.asarray(reference, float)
    den = float(np.dot(dt, ref * ref))
    if den == 0.0:
        raise UndefinedRelativeError("reference series is identically zero")
    diff = np.asarray(numeric, float) - ref
    return math.sqrt(float(np.dot(dt, diff * diff)) / den)
