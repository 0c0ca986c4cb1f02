"""Generalized discrete operators evaluated over a neighbor list.

All operators act on every particle at once and return arrays; scalar fields
of shape (N,) and vector fields of shape (N, m) are both accepted, vector
fields being processed componentwise in a single traversal.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .core import NeighborList, ParticleSystem
from .weights import ReferenceWeight, WeightTriple, moment


class DegenerateStencilError(ZeroDivisionError):
    """Shepard average with an empty stencil and w(0) = 0."""


def _as_columns(phi, n):
    phi = np.asarray(phi, dtype=float)
    if phi.shape[0] != n:
        raise ValueError(f"field has {phi.shape[0]} rows, expected {n}")
    scalar = phi.ndim == 1
    return np.ascontiguousarray(phi.reshape(n, -1)), scalar


def _volumes(system):
    return system.volumes if isinstance(system, ParticleSystem) else np.asarray(system, float)


def c0h(w: ReferenceWeight, h: float, N: int, vol_total: float, d: int | None = None) -> float:
    """Lattice-sum approximation of C_0(w) for a square lattice of spacing
    s = (vol_total / N)^(1/d): s^d sum_{z, |z| s < h} w_h(s |z|)."""
    d = w.dim if d is None else d
    if h <= 0:
        raise ValueError("h must be positive")
    s = (vol_total / N) ** (1.0 / d)
    if not s > 0:
        raise ValueError("effective spacing must be positive")
    m = int(math.ceil(h / s))
    ax = np.arange(-m, m + 1, dtype=float)
    grids = np.meshgrid(*([ax] * d), indexing="ij")
    r = s * np.sqrt(sum(g * g for g in grids)).ravel()
    r = r[r < h]
    return float(s ** d * h ** (-d) * np.sum(w(r / h)))


@dataclass
class OperatorSet:
    """Weight triple + influence radius h with the normalization constants
    C_interp = 1/C_0(w_interp), C_grad = d/C_1(w_grad), C_lap = 2d/C_2(w_lap)."""

    triple: WeightTriple
    h: float
    c_interp: float = field(init=False)
    c_grad: float = field(init=False)
    c_lap: float = field(init=False)
    degenerate_stencils: int = field(init=False, default=0)

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("h must be positive")
        d = self.d
        self.c_interp = 1.0 / moment(self.triple.interp, 0, d)
        self.c_grad = d / moment(self.triple.grad, 1, d)
        self.c_lap = 2.0 * d / moment(self.triple.lap, 2, d)
        self._pi = self.triple.interp.params
        self._gr = self.triple.grad.params
        self._la = self.triple.lap.params

    @property
    def d(self) -> int:
        return self.triple.dim

    @property
    def constants(self):
        return self.c_interp, self.c_grad, self.c_lap

    def _check(self, nl: NeighborList):
        if nl.h != self.h:
            raise ValueError(f"neighbor list built with h={nl.h}, operators use h={self.h}")

    def _count_empty(self, nl):
        self.degenerate_stencils += int(np.count_nonzero(nl.counts == 0))

    def _self_weight(self):
        kind, tf, scale, coeffs = self._pi
        return self.h ** (-self.d) * K.weight_value(kind, tf, scale, coeffs, 0.0)

    def kernel_density(self, system, nl):
        """sum_j V_j w_interp_h(|x_j - x_i|), j = i included (no constant)."""
        self._check(nl)
        vol = _volumes(system)
        ones = np.ones((vol.shape[0], 1))
        out = K.kernel_sum(nl.offsets, nl.indices, nl.dist, vol, ones, *self._pi,
                           self.h, self.d, self._self_weight())
        return out[:, 0]

    def interpolate(self, system, nl, phi):
        """C_interp sum_j V_j phi_j w_interp_h(|x_j - x_i|), j = i included."""
        self._check(nl)
        vol = _volumes(system)
        cols, scalar = _as_columns(phi, vol.shape[0])
        out = self.c_interp * K.kernel_sum(nl.offsets, nl.indices, nl.dist, vol, cols,
                                           *self._pi, self.h, self.d, self._self_weight())
        return out[:, 0] if scalar else out

    def shepard_interpolate(self, system, nl, phi, fallback=None):
        """Kernel average with weights V_j w_interp_h; exact for constants.

        Rows with an empty stencil and w_interp(0) = 0 have no defined value:
        they take ``fallback`` (counted as degenerate) or raise.
        """
        self._check(nl)
        vol = _volumes(system)
        cols, scalar = _as_columns(phi, vol.shape[0])
        out = K.shepard_sum(nl.offsets, nl.indices, nl.dist, vol, cols, *self._pi,
                            self.h, self.d, self._self_weight())
        bad = np.isnan(out[:, 0]) & ~np.isnan(cols[:, 0])
        if np.any(bad):
            if fallback is None:
                raise DegenerateStencilError(
                    f"{int(bad.sum())} particle(s) have an empty Shepard stencil")
            self.degenerate_stencils += int(bad.sum())
            fb, _ = _as_columns(fallback, vol.shape[0])
            out[bad] = fb[bad]
        return out[:, 0] if scalar else out

    def gradient(self, system, nl, phi):
        """(C_grad/h) sum_{j != i} V_j (phi_j - phi_i) e_ij w_grad_h(r_ij)."""
        return self._directional(system, nl, phi, -1.0)

    def gradient_plus(self, system, nl, phi):
        """(C_grad/h) sum_{j != i} V_j (phi_j + phi_i) e_ij w_grad_h(r_ij)."""
        return self._directional(system, nl, phi, 1.0)

    def _directional(self, system, nl, phi, sign):
        self._check(nl)
        self._count_empty(nl)
        vol = _volumes(system)
        cols, scalar = _as_columns(phi, vol.shape[0])
        out = K.directional_sum(nl.offsets, nl.indices, nl.disp, nl.dist, vol, cols,
                                *self._gr, self.h, self.d, sign)
        out *= self.c_grad / self.h
        return out[:, 0, :] if scalar else out

    def laplacian(self, system, nl, phi):
        """(C_lap/h^2) sum_{j != i} V_j (phi_j - phi_i) w_lap_h(r_ij)."""
        self._check(nl)
        self._count_empty(nl)
        vol = _volumes(system)
        cols, scalar = _as_columns(phi, vol.shape[0])
        out = K.difference_sum(nl.offsets, nl.indices, nl.dist, vol, cols, *self._la,
                               self.h, self.d)
        out *= self.c_lap / self.h ** 2
        return out[:, 0] if scalar else out

    def divergence(self, system, nl, u):
        """Trace of the componentwise gradient of a vector field."""
        g = self.gradient(system, nl, u)
        return np.einsum("iaa->i", g)
