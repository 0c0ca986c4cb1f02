"""Lid-driven cavity on the unit square with dummy-particle walls."""
from __future__ import annotations

import time

import numpy as np

from ..core import DomainSpec, lattice_init
from ..solver import InstabilityError, Solver, SolverConfig
from ..weights import preset_triple
from .norms import weighted_profile_error
from .profiles import ReferenceProfile, ghia_profile
from .report import ErrorReport

H_WALL = 0.1


def lid_velocity(x, t):
    """(1, 0) on and above the lid line x2 = 1, zero elsewhere."""
    u = np.zeros_like(x)
    u[x[:, 1] >= 1.0, 0] = 1.0
    return u


def setup_cavity(preset="g-s", Re=100, dx=0.01, h_factor=3.1, eps=0.1, T=1e9):
    dom = DomainSpec((0.0, 0.0), (1.0, 1.0), (False, False), H_WALL)
    system = lattice_init(dom, dx, include_dummy_layers=True)
    system.velocities[:] = lid_velocity(system.positions, 0.0)
    system.velocities[system.fluid] = 0.0
    cfg = SolverConfig(rho=1.0, nu=1.0 / Re, eps=eps, T=T, boundary_velocity=lid_velocity)
    return Solver(dom, system, preset_triple(preset), h_factor * dx, cfg, dx=dx)


def sample_profile(positions, velocities, heights, x1=0.5, component=0):
    """Velocity component of the particle nearest to each (x1, y_j)."""
    pts = np.stack([np.full(len(heights), x1), np.asarray(heights, float)], axis=1)
    d2 = ((positions[None, :, :] - pts[:, None, :]) ** 2).sum(axis=2)
    return velocities[np.argmin(d2, axis=1), component]


def steady_indicator(u_new, u_old, tau, fluid):
    """max_i |u^{k+1}_i - u^k_i| / tau over fluid particles."""
    du = np.linalg.norm(u_new[fluid] - u_old[fluid], axis=1)
    return float(du.max()) / tau if du.size else 0.0


def run_cavity(preset="g-s", Re=100, dx=0.01, h_factor=3.1, eps=0.1,
               reference: ReferenceProfile | None = None, steady_tol=1e-3,
               max_steps=200_000, t_max=None, check_every=1, on_step=None) -> ErrorReport:
    """Run until the steady indicator drops below ``steady_tol`` (U = L = 1),
    or until ``max_steps`` steps / time ``t_max``; then compare the
    centre-line profile with the reference.

    ``extra['steady']`` tells whether the tolerance was met.
    """
    ref = reference if reference is not None else ghia_profile(Re)
    T = 1e9 if t_max is None else t_max
    solver = setup_cavity(preset, Re, dx, h_factor, eps, T)
    rep = ErrorReport(f"cavity[{preset}, Re={Re}, dx={dx}, h={h_factor}dx]")
    rep.metadata = solver.metadata()
    cap = min(max_steps, solver.K)
    status = {"steady": False, "indicator": float("nan")}
    prev = [solver.initial.velocities.copy()]
    hist = []

    def cb(state):
        if on_step is not None:
            on_step(state)
        if state.k % check_every:
            prev[0] = state.system.velocities.copy()
            return False
        ind = steady_indicator(state.system.velocities, prev[0], solver.tau, solver.fluid)
        prev[0] = state.system.velocities.copy()
        status["indicator"] = ind
        hist.append((state.k, state.t, ind))
        if ind <= steady_tol:
            status["steady"] = True
            return True
        return False

    t0 = time.perf_counter()
    final = None
    try:
        final = solver.run(steps=cap, callback=cb)
    except InstabilityError as exc:
        rep.stable = False
        rep.diverged_step = exc.step
    rep.runtime = time.perf_counter() - t0
    rep.extra.update(steady=status["steady"], indicator=status["indicator"],
                     h=solver.h, tau=solver.tau, indicator_history=np.array(hist).reshape(-1, 3))
    if final is None:
        rep.vel_spacetime = float("inf")
        return rep
    u_num = sample_profile(final.system.positions, final.system.velocities, ref.abscissa)
    rep.vel_spacetime = weighted_profile_error(u_num, ref.values, ref.abscissa)
    rep.extra["profile"] = np.stack([ref.abscissa, u_num, ref.values], axis=1)
    rep.extra["t_end"] = final.t
    rep.extra["steps_run"] = final.k
    rep.metadata["diagnostics"] = vars(final.diagnostics)
    return rep
