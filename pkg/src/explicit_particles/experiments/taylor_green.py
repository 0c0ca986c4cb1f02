"""Taylor-Green vortex on the periodic unit box: accuracy and convergence."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from ..core import DomainSpec, lattice_init
from ..solver import InstabilityError, Solver, SolverConfig
from ..weights import preset_triple
from .norms import l2_norm, l2_spacetime_error, mean_shift_pressure, convergence_rate
from .report import ErrorReport


@dataclass(frozen=True)
class TaylorGreenParams:
    U: float = 1.0
    L: float = 1.0
    Re: float = 10.0
    rho: float = 1.0

    def __post_init__(self):
        if min(self.U, self.L, self.Re, self.rho) <= 0:
            raise ValueError("Taylor-Green parameters must be positive")

    @property
    def nu(self) -> float:
        return self.U * self.L / self.Re


def taylor_green_exact(x, t, params: TaylorGreenParams = TaylorGreenParams()):
    """Exact (velocity, pressure) of the decaying vortex at points x (N, 2)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != 2:
        raise ValueError("Taylor-Green vortex is two-dimensional")
    U, L, rho = params.U, params.L, params.rho
    k = 2.0 * math.pi / L
    decay = math.exp(-8.0 * math.pi ** 2 * t / params.Re)
    c1, s1 = np.cos(k * x[:, 0]), np.sin(k * x[:, 0])
    c2, s2 = np.cos(k * x[:, 1]), np.sin(k * x[:, 1])
    u = U * decay * np.stack([-c1 * s2, s1 * c2], axis=1)
    p = -rho / 4.0 * decay ** 2 * (np.cos(2 * k * x[:, 0]) + np.cos(2 * k * x[:, 1]))
    return u, p


def convergence_radius(dx: float, m: int) -> float:
    """h = C_m dx^(1/m) with C_m = 3.1 * 0.04^(1 - 1/m) (h = 0.124 at dx = 0.04)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return 3.1 * 0.04 ** (1.0 - 1.0 / m) * dx ** (1.0 / m)


def setup_taylor_green(preset="g-s", dx=0.04, m=None, with_recalc=True, h=None, eps=None,
                       T=0.1, params: TaylorGreenParams = TaylorGreenParams(), tau="auto"):
    """Solver and initial state for one Taylor-Green run.

    ``m=None`` is the fixed-resolution set-up (h = 3.1 dx, eps = 0.1);
    an integer m selects the convergence set-up (h = C_m dx^(1/m),
    eps = 2.5 dx). Explicit ``h``/``eps`` override either.
    """
    dom = DomainSpec((0.0, 0.0), (params.L, params.L), (True, True))
    system = lattice_init(dom, dx)
    u0, _ = taylor_green_exact(system.positions, 0.0, params)
    system.velocities[:] = u0
    if m is None:
        h = 3.1 * dx if h is None else h
        eps = 0.1 if eps is None else eps
    else:
        h = convergence_radius(dx, m) if h is None else h
        eps = 2.5 * dx if eps is None else eps
    cfg = SolverConfig(rho=params.rho, nu=params.nu, eps=eps, T=T, tau=tau,
                       pressure_recalc=with_recalc)
    return Solver(dom, system, preset_triple(preset), h, cfg, dx=dx)


def run_taylor_green(preset="g-s", dx=0.04, m=None, with_recalc=True, h=None, eps=None,
                     T=0.1, params: TaylorGreenParams = TaylorGreenParams(),
                     squared_norm=True, on_step=None) -> ErrorReport:
    """Run the vortex and compare with the exact solution at every step.

    Errors are relative l2 norms at the particle positions x^k, the
    pressure being mean-shifted first. Space-time aggregates use the
    squared inner norm unless ``squared_norm=False``.
    """
    solver = setup_taylor_green(preset, dx, m, with_recalc, h, eps, T, params)
    rep = ErrorReport(f"taylor-green[{preset}, dx={dx}, m={m}, recalc={with_recalc}]")
    rep.metadata = solver.metadata()
    vol = solver.initial.volumes
    nu_, du, np_, dp = [], [], [], []

    def cb(state):
        x = state.system.positions
        ue, pe = taylor_green_exact(x, state.t, params)
        pbar = mean_shift_pressure(state.system.pressures, vol)
        eu = l2_norm(state.system.velocities - ue, vol)
        ep = l2_norm(pbar - pe, vol)
        nu_.append(l2_norm(ue, vol))
        np_.append(l2_norm(pe, vol))
        du.append(eu)
        dp.append(ep)
        rep.steps.append(state.k)
        rep.times.append(state.t)
        rep.vel_err.append(eu / nu_[-1])
        rep.pres_err.append(ep / np_[-1] if np_[-1] > 0 else float("nan"))
        if on_step is not None:
            on_step(state)

    t0 = time.perf_counter()
    try:
        final = solver.run(callback=cb)
        rep.metadata["diagnostics"] = vars(final.diagnostics)
    except InstabilityError as exc:
        rep.stable = False
        rep.diverged_step = exc.step
    rep.runtime = time.perf_counter() - t0
    if du:
        rep.vel_spacetime = l2_spacetime_error(du, nu_, solver.tau, squared_norm)
        rep.pres_spacetime = l2_spacetime_error(dp, np_, solver.tau, squared_norm)
        rep.extra["vel_spacetime_unsquared"] = l2_spacetime_error(du, nu_, solver.tau, False)
        rep.extra["pres_spacetime_unsquared"] = l2_spacetime_error(dp, np_, solver.tau, False)
    if not rep.stable:
        rep.vel_spacetime = rep.pres_spacetime = float("inf")
    rep.extra["h"] = solver.h
    rep.extra["tau"] = solver.tau
    rep.extra["eps"] = solver.config.eps
    return rep


@dataclass
class ConvergenceResult:
    preset: str
    m: int
    dxs: list
    hs: list
    reports: list
    vel_rates: list
    pres_rates: list

    def rows(self):
        """(dx_coarse, dx_fine, h_coarse, h_fine, vel_rate, pres_rate)."""
        out = []
        for i in range(len(self.vel_rates)):
            out.append((self.dxs[i], self.dxs[i + 1], self.hs[i], self.hs[i + 1],
                        self.vel_rates[i], self.pres_rates[i]))
        return out


def _rate(e1, e2, h1, h2):
    if not (math.isfinite(e1) and math.isfinite(e2)) or e1 <= 0 or e2 <= 0:
        return float("nan")
    return convergence_rate(e1, e2, h1, h2)


def convergence_study(preset="g-s", dxs=(0.04, 0.02, 0.01, 0.005), m=2,
                      with_recalc=True, squared_norm=True, progress=None) -> ConvergenceResult:
    """Space-time errors over a dx sweep and observed rates in h between
    consecutive resolutions (NaN where a run was unstable)."""
    reports, hs = [], []
    for dx in dxs:
        rep = run_taylor_green(preset, dx, m, with_recalc, squared_norm=squared_norm)
        reports.append(rep)
        hs.append(rep.extra["h"])
        if progress is not None:
            progress(rep)
    vr, pr = [], []
    for a, b in zip(range(len(dxs) - 1), range(1, len(dxs))):
        vr.append(_rate(reports[a].vel_spacetime, reports[b].vel_spacetime, hs[a], hs[b]))
        pr.append(_rate(reports[a].pres_spacetime, reports[b].pres_spacetime, hs[a], hs[b]))
    return ConvergenceResult(preset, m, list(dxs), hs, reports, vr, pr)


def initial_divergence(dx, m=2, preset="g-s"):
    """l2 norm of the discrete divergence of the exact initial field."""
    solver = setup_taylor_green(preset, dx, m)
    st = solver.initial_state()
    div = solver.ops.divergence(st.system, st.nlist, st.system.velocities)
    return l2_norm(div, st.system.volumes)
