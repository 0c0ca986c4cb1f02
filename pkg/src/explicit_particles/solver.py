"""Explicit penalty-based particle stepper for incompressible Navier-Stokes.

One time step:

1. velocity predictor with viscosity and body force (fluid particles);
2. tentative positions x* = x + tau u*;
3. tentative pressure from the kernel density deficit at x*;
4. position correction with the plus-gradient of p* on the x* stencil;
5. Shepard recalculation of the pressure on the corrected positions;
6. velocity correction with the pressure gradient.

Boundary (dummy) particles keep their positions and take the prescribed
boundary velocity. The free-surface variant clamps p* at zero, uses the
plus-gradient in the velocity correction and can resolve close collisions.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, asdict
from typing import Callable, Optional

import numpy as np

from .core import (ConfigurationError, DomainSpec, NeighborBuffer, NeighborList, ParticleSystem,
                   build_neighbor_list, wrap_position)
from .operators import OperatorSet, c0h
from .weights import WeightTriple

log = logging.getLogger(__name__)


class InstabilityError(RuntimeError):
    """Non-finite values appeared; ``step`` is the index of the failed step."""

    def __init__(self, step, what="state"):
        super().__init__(f"non-finite {what} at step {step}")
        self.step = step
        self.what = what


def dt_max(h: float, eps: float, nu: float, f_inf: float = 0.0) -> float:
    """Stability bound min{h eps/4, sqrt(h)/(4 sqrt(f_inf)), h^2/(8 nu)}."""
    if h <= 0 or eps <= 0 or nu <= 0 or f_inf < 0:
        raise ValueError("need h, eps, nu > 0 and f_inf >= 0")
    force = math.inf if f_inf == 0 else math.sqrt(h) / (4.0 * math.sqrt(f_inf))
    return min(h * eps / 4.0, force, h * h / (8.0 * nu))


@dataclass
class CollisionConfig:
    enabled: bool = False
    distance_factor: float = 0.8
    restitution: float = 0.2

    def __post_init__(self):
        if not 0 < self.distance_factor <= 1:
            raise ConfigurationError("collision distance_factor must be in (0, 1]")
        if not 0 <= self.restitution <= 1:
            raise ConfigurationError("collision restitution must be in [0, 1]")


@dataclass
class SolverConfig:
    """Physical and numerical parameters of a run.

    ``body_force`` and ``boundary_velocity`` are either None (zero), a
    constant d-vector or a callable ``(x, t) -> (N, d) array``. ``f_inf`` is
    the sup norm of the body force used by the time-step bound.
    """

    rho: float = 1.0
    nu: float = 0.1
    eps: float = 0.1
    T: float = 0.1
    tau: object = "auto"
    body_force: object = None
    f_inf: float = 0.0
    boundary_velocity: object = None
    pressure_recalc: bool = True
    free_surface: bool = False
    collision: CollisionConfig = field(default_factory=CollisionConfig)

    def __post_init__(self):
        for name in ("rho", "nu", "eps", "T"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and v > 0 and math.isfinite(v)):
                raise ConfigurationError(f"{name} must be a positive number, got {v!r}")
        if self.f_inf < 0:
            raise ConfigurationError("f_inf must be nonnegative")
        if self.tau != "auto" and not (isinstance(self.tau, (int, float)) and self.tau > 0):
            raise ConfigurationError("tau must be 'auto' or a positive number")
        if isinstance(self.collision, dict):
            self.collision = CollisionConfig(**self.collision)

    def time_step(self, h):
        bound = dt_max(h, self.eps, self.nu, self.f_inf)
        if self.tau == "auto":
            return bound
        if self.tau > bound * (1 + 1e-12):
            raise ConfigurationError(f"tau={self.tau} exceeds the stability bound {bound}")
        return float(self.tau)

    def describe(self) -> dict:
        out = {}
        for k, v in asdict(self).items():
            if callable(getattr(self, k)):
                out[k] = getattr(getattr(self, k), "__name__", "callable")
            elif isinstance(v, np.ndarray):
                out[k] = v.tolist()
            else:
                out[k] = v
        return out


@dataclass
class Diagnostics:
    degenerate_stencils: int = 0
    clamped_pressures: int = 0
    collisions: int = 0
    shepard_fallbacks: int = 0
    neighbor_builds: int = 0


@dataclass
class StepState:
    """Solution at t^k plus the tentative arrays of the step that produced it."""

    k: int
    t: float
    system: ParticleSystem
    nlist: NeighborList
    x_star: Optional[np.ndarray] = None
    u_star: Optional[np.ndarray] = None
    p_star: Optional[np.ndarray] = None
    diagnostics: Diagnostics = field(default_factory=Diagnostics)


def _field(spec, x, t, d):
    if spec is None:
        return np.zeros((x.shape[0], d))
    if callable(spec):
        return np.broadcast_to(np.asarray(spec(x, t), dtype=float), (x.shape[0], d))
    return np.broadcast_to(np.asarray(spec, dtype=float), (x.shape[0], d))


def collision_resolve(positions, velocities, volumes, movable, rho, dx, config,
                      domain=None, nlist=None):
    """Pairwise inelastic collisions for particles closer than distance_factor*dx.

    Approaching pairs exchange a normal impulse so that their relative normal
    velocity becomes ``-restitution`` times its previous value; every close
    pair is then pushed apart along its axis to the collision distance,
    splitting the shift by mass so the centre of mass stays put. Particles
    with ``movable`` False (walls) act as infinitely heavy.
    Returns (positions, velocities, number of pairs treated).
    """
    x = np.array(positions, dtype=float)
    u = np.array(velocities, dtype=float)
    mass = rho * np.asarray(volumes, dtype=float)
    inv = np.where(movable, 1.0 / mass, 0.0)
    dist0 = config.distance_factor * dx
    if nlist is None:
        if domain is None:
            raise ValueError("need a domain or a neighbor list")
        nlist = build_neighbor_list(x, domain, max(dist0, 1e-300) * (1 + 1e-12), sort=True)
    rows = nlist.row_ids()
    sel = (nlist.dist < dist0) & (rows < nlist.indices)
    pairs = np.stack([rows[sel], nlist.indices[sel]], axis=1)
    e = config.restitution
    count = 0
    for i, j in pairs:
        wi, wj = inv[i], inv[j]
        if wi + wj == 0:
            continue
        v = x[j] - x[i]
        if domain is not None:
            v = np.where(domain.periodic, v - domain.lengths * np.floor(v / domain.lengths + 0.5), v)
        r = math.sqrt(float(v @ v))
        if r >= dist0 or r == 0.0:
            continue
        n = v / r
        vn = float((u[j] - u[i]) @ n)
        if vn < 0.0:
            J = (1.0 + e) * vn / (wi + wj)
            u[i] += J * wi * n
            u[j] -= J * wj * n
        shift = (dist0 - r) / (wi + wj)
        x[i] -= shift * wi * n
        x[j] += shift * wj * n
        count += 1
    return x, u, count


class Solver:
    """Binds a domain, weight triple, influence radius and config.

    ``dx`` is the initial particle spacing; it is only needed for the
    collision distance.
    """

    def __init__(self, domain: DomainSpec, system: ParticleSystem, triple: WeightTriple,
                 h: float, config: SolverConfig, dx: float | None = None):
        if system.dim != domain.dim or triple.dim != domain.dim:
            raise ConfigurationError("dimension mismatch between domain, particles and weights")
        if not all(domain.periodic) and h > domain.H / 2 * (1 + 1e-9):
            raise ConfigurationError(f"influence radius h={h} exceeds H/2={domain.H / 2}")
        self.domain = domain
        self.config = config
        self.ops = OperatorSet(triple, h)
        self.h = float(h)
        self.tau = config.time_step(h)
        self.K = int(math.floor(config.T / self.tau + 1e-9))
        self.dx = dx
        if config.free_surface and config.collision.enabled and dx is None:
            raise ConfigurationError("collisions need the initial spacing dx")
        self.vol_total = float(system.volumes.sum())
        self.c0h = c0h(triple.interp, self.h, system.n, self.vol_total, domain.dim)
        self.initial = system.copy()
        self.fluid = system.fluid.copy()
        self._per = np.asarray(domain.periodic)
        self._buffers = [NeighborBuffer(domain.dim) for _ in range(3)]

    # -- helpers -----------------------------------------------------------

    def _neighbors(self, x, diag, *in_use):
        # three rotating buffers: lists at x^k, x* and x^{k+1} can coexist
        busy = {id(nl.buffer) for nl in in_use if nl is not None}
        buf = next(b for b in self._buffers if id(b) not in busy)
        diag.neighbor_builds += 1
        return build_neighbor_list(x, self.domain, self.h, sort=False, buffer=buf)

    def _wrap(self, x):
        return wrap_position(x, self.domain) if self._per.any() else x

    def metadata(self) -> dict:
        return {
            "h": self.h,
            "tau": self.tau,
            "K": self.K,
            "c0h": self.c0h,
            "C_interp": self.ops.c_interp,
            "C_grad": self.ops.c_grad,
            "C_lap": self.ops.c_lap,
            "preset": self.ops.triple.tag,
            "N": int(self.initial.n),
            "N_fluid": int(self.fluid.sum()),
            "config": self.config.describe(),
        }

    def initial_state(self, system: ParticleSystem | None = None) -> StepState:
        sys0 = (system or self.initial).copy()
        diag = Diagnostics()
        return StepState(0, 0.0, sys0, self._neighbors(sys0.positions, diag), diagnostics=diag)

    # -- steps ---------------------------------------------------------------

    def predictor(self, state: StepState):
        """Steps 1-2: (u*, x*)."""
        cfg, tau, sysk = self.config, self.tau, state.system
        d = sysk.dim
        x, u = sysk.positions, sysk.velocities
        lap = self.ops.laplacian(sysk, state.nlist, u)
        f = _field(cfg.body_force, x, state.t, d)
        u_star = u + tau * (cfg.nu * lap + f)
        bd = ~self.fluid
        if bd.any():
            u_star[bd] = _field(cfg.boundary_velocity, x[bd], state.t, d)
        x_star = x.copy()
        x_star[self.fluid] += tau * u_star[self.fluid]
        return u_star, self._wrap(x_star)

    def penalty_pressure(self, x_star, nl_star, diag: Diagnostics | None = None):
        """Step 3: p* = rho/eps^2 (sum_j V_j w_h / C_0h - 1), clamped at 0 for free surfaces."""
        cfg = self.config
        dens = self.ops.kernel_density(self.initial.volumes, nl_star)
        p = cfg.rho / cfg.eps ** 2 * (dens / self.c0h - 1.0)
        if cfg.free_surface:
            neg = p < 0
            if diag is not None:
                diag.clamped_pressures += int(neg.sum())
            p = np.where(neg, 0.0, p)
        return p

    def position_correct(self, x_star, p_star, nl_star):
        """Step 4: x^{k+1} = x* - tau^2/rho grad+ p* on the tentative stencil."""
        g = self.ops.gradient_plus(self.initial.volumes, nl_star, p_star)
        x_new = x_star.copy()
        x_new[self.fluid] -= self.tau ** 2 / self.config.rho * g[self.fluid]
        return self._wrap(x_new)

    def pressure_velocity_update(self, x_new, u_star, p_star, nl_new, t_new, diag):
        """Steps 5-6: (p^{k+1}, u^{k+1}) on the corrected positions."""
        cfg = self.config
        vol = self.initial.volumes
        if cfg.pressure_recalc:
            before = self.ops.degenerate_stencils
            p = self.ops.shepard_interpolate(vol, nl_new, p_star, fallback=p_star)
            diag.shepard_fallbacks += self.ops.degenerate_stencils - before
        else:
            p = p_star.copy()
        if cfg.free_surface:
            g = self.ops.gradient_plus(vol, nl_new, p)
        else:
            g = self.ops.gradient(vol, nl_new, p)
        u = u_star.copy()
        u[self.fluid] -= self.tau / cfg.rho * g[self.fluid]
        bd = ~self.fluid
        if bd.any():
            u[bd] = _field(cfg.boundary_velocity, x_new[bd], t_new, x_new.shape[1])
        return p, u

    def advance(self, state: StepState) -> StepState:
        """One full step k -> k+1."""
        cfg = self.config
        diag = state.diagnostics
        k1 = state.k + 1
        t1 = k1 * self.tau
        deg0 = self.ops.degenerate_stencils

        u_star, x_star = self.predictor(state)
        if not (np.isfinite(u_star).all() and np.isfinite(x_star).all()):
            raise InstabilityError(k1, "predictor")
        nl_star = self._neighbors(x_star, diag, state.nlist)
        p_star = self.penalty_pressure(x_star, nl_star, diag)
        if not np.isfinite(p_star).all():
            raise InstabilityError(k1, "tentative pressure")
        x_new = self.position_correct(x_star, p_star, nl_star)
        if not np.isfinite(x_new).all():
            raise InstabilityError(k1, "positions")
        nl_new = self._neighbors(x_new, diag, state.nlist, nl_star)
        if cfg.free_surface and cfg.collision.enabled:
            x_new, u_star, n_col = collision_resolve(
                x_new, u_star, self.initial.volumes, self.fluid, cfg.rho, self.dx,
                cfg.collision, self.domain, nl_new)
            if n_col:
                diag.collisions += n_col
                x_new = self._wrap(x_new)
                nl_new = self._neighbors(x_new, diag, state.nlist, nl_new)
        p_new, u_new = self.pressure_velocity_update(x_new, u_star, p_star, nl_new, t1, diag)
        if not (np.isfinite(p_new).all() and np.isfinite(u_new).all()):
            raise InstabilityError(k1, "pressure/velocity")
        diag.degenerate_stencils += self.ops.degenerate_stencils - deg0

        sysk = state.system
        new_sys = ParticleSystem(x_new, u_new, p_new, sysk.volumes, sysk.kinds)
        return StepState(k1, t1, new_sys, nl_new, x_star, u_star, p_star, diag)

    def run(self, state: StepState | None = None, steps: int | None = None,
            callback: Callable[[StepState], object] | None = None) -> StepState:
        """Advance ``steps`` times (default: up to K). ``callback(state)`` is
        called after every step; returning True stops the run early."""
        state = state or self.initial_state()
        n = self.K - state.k if steps is None else steps
        for _ in range(n):
            state = self.advance(state)
            if callback is not None and callback(state):
                break
        return state
