"""Reference weight functions on the unit support, their moments and the
polynomial weight optimizer.

A :class:`ReferenceWeight` is a base kernel (spike, B-splines, Wendland, MPS
or a user polynomial) composed with a role transform that turns it into the
function actually used by an operator, e.g. ``-w'(r)/r`` for an SPH-type
Laplacian. All functions vanish for ``r >= 1``; scaling to a physical
influence radius happens only through :func:`scaled_eval`.
"""
from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from . import _kernels as K

KIND_CODES = {
    "spike": K.SPIKE,
    "cubic": K.CUBIC,
    "quintic": K.QUINTIC,
    "wendland": K.WENDLAND,
    "mps": K.MPS,
    "polynomial": K.POLY,
}
SPH_KINDS = ("cubic", "quintic", "wendland")

TRANSFORM_CODES = {
    "identity": K.IDENTITY,
    "neg_derivative": K.NEG_DERIV,
    "neg_derivative_over_r": K.NEG_DERIV_OVER_R,
    "over_r": K.OVER_R,
}

KNOTS = (1.0 / 3.0, 0.5, 2.0 / 3.0)
PRESETS = ("g-s", "s-c", "s-q", "s-w", "m")


class WeightDomainError(ValueError):
    """A quantity is undefined for the given weight (divergent integral, no C1)."""


def surface_area(d: int) -> float:
    """Area of the unit sphere in R^d."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def _radial_quad(f, k_power, d, points=KNOTS):
    """surface(d) * int_0^1 r^(k_power + d - 1) f(r) dr with divergence checks."""
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, _ = integrate.quad(lambda r: r ** (k_power + d - 1) * f(r), 0.0, 1.0,
                                    points=points, epsabs=1e-12, epsrel=1e-12, limit=200)
        except integrate.IntegrationWarning as exc:
            raise WeightDomainError(f"radial integral does not converge: {exc}") from None
    if not math.isfinite(val):
        raise WeightDomainError("radial integral does not converge")
    return surface_area(d) * val


@functools.lru_cache(maxsize=None)
def sph_normalization(kind: str, d: int) -> float:
    """Constant a_d making the base kernel integrate to one over R^d."""
    code = KIND_CODES[kind]
    empty = np.zeros(0)
    raw = _radial_quad(lambda r: K.base_value(code, r, empty), 0, d)
    return 1.0 / raw


@dataclass(frozen=True)
class ReferenceWeight:
    """Base kernel composed with a role transform, supported on ``[0, 1)``.

    ``coefficients`` is only used by ``kind="polynomial"`` (a_0, ..., a_n).
    SPH base kernels are normalized to unit integral in ``dim`` dimensions.
    """

    kind: str = "spike"
    transform: str = "identity"
    dim: int = 2
    coefficients: tuple = ()

    def __post_init__(self):
        if self.kind not in KIND_CODES:
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if self.transform not in TRANSFORM_CODES:
            raise ValueError(f"unknown role transform {self.transform!r}")
        if self.dim not in (2, 3):
            raise ValueError("dim must be 2 or 3")
        coeffs = tuple(float(c) for c in self.coefficients)
        object.__setattr__(self, "coefficients", coeffs)
        if self.kind == "polynomial":
            a = np.asarray(coeffs)
            if a.size < 3 or a[0] <= 0:
                raise ValueError("polynomial weight needs a_0 > 0 and degree >= 2")
            k = np.arange(a.size)
            tol = 1e-10 * np.abs(a).sum()
            if abs(a.sum()) > tol or abs((k * a).sum()) > tol:
                raise ValueError("polynomial weight must satisfy w(1) = w'(1) = 0")
            r = np.linspace(0.0, 1.0, 1001)[1:-1]
            if np.any(np.polyval(a[::-1], r) <= 0):
                raise ValueError("polynomial weight must be positive on (0, 1)")

    @property
    def params(self):
        """Arguments for the compiled evaluators."""
        scale = sph_normalization(self.kind, self.dim) if self.kind in SPH_KINDS else 1.0
        return (KIND_CODES[self.kind], TRANSFORM_CODES[self.transform], scale,
                np.asarray(self.coefficients, dtype=float))

    @property
    def singular_at_origin(self) -> bool:
        """True where the value at r = 0 is a convention (returned as 0)."""
        return self.transform in ("over_r", "neg_derivative_over_r") or self.kind == "mps"

    @property
    def is_c1(self) -> bool:
        return self.kind != "mps" and self.transform == "identity"

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = K.weight_array(*self.params, np.ascontiguousarray(r.ravel()))
        return out.reshape(r.shape) if r.ndim else float(out[0])

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        out = K.weight_deriv_array(*self.params, np.ascontiguousarray(r.ravel()))
        return out.reshape(r.shape) if r.ndim else float(out[0])

    def with_transform(self, transform: str) -> "ReferenceWeight":
        return ReferenceWeight(self.kind, transform, self.dim, self.coefficients)


def evaluate(w: ReferenceWeight, r):
    """w(r); zero for r >= 1 and, for r/1-type transforms, at r = 0."""
    if np.any(np.asarray(r) < 0):
        raise ValueError("r must be nonnegative")
    return w(r)


def scaled_eval(w: ReferenceWeight, h: float, r):
    """w_h(r) = h^-d w(r / h)."""
    if h <= 0:
        raise ValueError("h must be positive")
    return h ** (-w.dim) * w(np.asarray(r, dtype=float) / h)


def moment(w: ReferenceWeight, k: int, d: int | None = None) -> float:
    """C_k(w) = int_{R^d} |x|^k w(|x|) dx by adaptive quadrature."""
    d = w.dim if d is None else d
    if k < 0:
        raise ValueError("k must be nonnegative")
    return _cached_moment(w, k, d)


@functools.lru_cache(maxsize=512)
def _cached_moment(w, k, d):
    # weights are frozen and hashable; errors are not cached
    return _radial_quad(w, k, d)


def operator_constants(w_interp, w_grad, w_lap, d):
    """(C_interp, C_grad, C_lap) = (1/C_0, d/C_1, 2d/C_2)."""
    return (1.0 / moment(w_interp, 0, d), d / moment(w_grad, 1, d),
            2.0 * d / moment(w_lap, 2, d))


def objective_F(w: ReferenceWeight, d: int | None = None) -> float:
    """Weight-dependent factor of the distribution-driven Laplacian error.

    F(w) = int (w + 2|w'|) / int |x|^2 |w| over R^d; angular factors cancel.
    """
    d = w.dim if d is None else d
    if w.kind == "mps":
        raise WeightDomainError("F needs a weight that is C1 on [0, inf); MPS is singular at 0")
    num = _radial_quad(lambda r: w(r) + 2.0 * abs(w.derivative(r)), 0, d)
    den = _radial_quad(lambda r: abs(w(r)), 2, d)
    return num / den


# --------------------------------------------------------------------------
# polynomial weights

SPIKE_COEFFS = (1.0, -2.0, 1.0)


def _poly_coeffs_from_factor(c):
    # w(r) = (1 - r)^2 q(r), q(r) = 1 + c_1 r + ... ; double root at 1 gives
    # w(1) = w'(1) = 0 and w(0) = 1 without any penalty terms.
    q = np.concatenate(([1.0], np.asarray(c, dtype=float)))
    return np.convolve(np.array(SPIKE_COEFFS), q)


_POS_GRID = np.linspace(0.0, 1.0, 513)[1:-1]


def polynomial_F(coeffs, d: int) -> float:
    """F for w(r) = sum a_k r^k on [0, 1], integrated exactly piecewise.

    Returns +inf when w is not positive on (0, 1).
    """
    a = np.asarray(coeffs, dtype=float)
    if np.any(np.polyval(a[::-1], _POS_GRID) <= 0):
        return math.inf
    k = np.arange(a.size)
    # int_0^1 r^(d-1) w and int_0^1 r^(d+1) w
    val_part = float(np.sum(a / (k + d)))
    den = float(np.sum(a / (k + d + 2)))
    # |w'| integrated between the sign changes of w'
    da = (k * a)[1:]
    breaks = [0.0, 1.0]
    # negligible leading terms only move roots towards infinity; drop them so
    # the companion matrix stays finite
    lead = np.where(np.abs(da) > 1e-14 * np.abs(da).max(initial=0.0))[0]
    dt = da[: lead[-1] + 1] if lead.size else da[:0]
    if dt.size > 1:
        for root in np.roots(dt[::-1]):
            if abs(root.imag) < 1e-12 and 0.0 < root.real < 1.0:
                breaks.append(float(root.real))
    breaks = np.sort(breaks)
    # G(r) = int_0^r s^(d-1) w'(s) ds = sum_k k a_k r^(k+d-1) / (k+d-1)
    kk = k[1:]
    G = np.array([np.sum(da * b ** (kk + d - 1) / (kk + d - 1)) for b in breaks])
    deriv_part = float(np.abs(np.diff(G)).sum())
    return (val_part + 2.0 * deriv_part) / den


def optimize_polynomial(n: int, d: int = 2, restarts: int = 8, seed: int = 0) -> np.ndarray:
    """Degree-n weight minimizing F subject to a_0 > 0, w(1) = w'(1) = 0.

    Coefficients are gauge-fixed to a_0 = 1 (F is scale invariant). The
    constraints are eliminated by writing w = (1 - r)^2 q(r); the remaining
    n - 2 coefficients of q are searched with Nelder-Mead from several
    starting points, infeasible (non-positive) candidates scoring a large
    barrier value. When the infimum lies on the boundary a_0 -> 0+ (e.g.
    n = 3 in 3-D) the returned coefficients grow large.
    """
    if int(n) != n or n < 2:
        raise ValueError("degree n must be an integer >= 2")
    if d not in (2, 3):
        raise ValueError("d must be 2 or 3")
    n = int(n)
    if n == 2:
        return np.array(SPIKE_COEFFS)

    def f(c):
        v = polynomial_F(_poly_coeffs_from_factor(c), d)
        # finite barrier keeps the simplex convergence test well defined
        return v if math.isfinite(v) else 1e12

    rng = np.random.default_rng(seed)
    starts = [np.zeros(n - 2)] + [rng.uniform(-0.9, 2.0, n - 2) for _ in range(restarts)]
    best = None
    for x0 in starts:
        if f(x0) >= 1e12:
            continue
        res = optimize.minimize(f, x0, method="Nelder-Mead",
                                options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 3000 * (n - 2)})
        if best is None or res.fun < best.fun:
            best = res
    if best is None:
        raise ValueError(f"no feasible start for degree {n}")
    return _poly_coeffs_from_factor(best.x)


# --------------------------------------------------------------------------
# presets


@dataclass(frozen=True)
class WeightTriple:
    """Weights for the interpolant, gradient and Laplacian."""

    interp: ReferenceWeight
    grad: ReferenceWeight
    lap: ReferenceWeight
    tag: str = "custom"

    @property
    def dim(self) -> int:
        return self.interp.dim


_PRESET_BASE = {"s-c": "cubic", "s-q": "quintic", "s-w": "wendland"}


def preset_triple(tag: str, dim: int = 2) -> WeightTriple:
    """Named weight sets: g-s (spike), s-c / s-q / s-w (SPH with cubic,
    quintic or Wendland base) and m (MPS)."""
    tag = tag.lower()
    if tag == "g-s":
        w = ReferenceWeight("spike", "identity", dim)
        return WeightTriple(w, w, w, tag)
    if tag in _PRESET_BASE:
        base = ReferenceWeight(_PRESET_BASE[tag], "identity", dim)
        return WeightTriple(base, base.with_transform("neg_derivative"),
                            base.with_transform("neg_derivative_over_r"), tag)
    if tag == "m":
        w = ReferenceWeight("mps", "identity", dim)
        return WeightTriple(w, w.with_transform("over_r"), w, tag)
    raise ValueError(f"unknown weight preset {tag!r}; expected one of {PRESETS}")


def polynomial_triple(coefficients, dim: int = 2) -> WeightTriple:
    """Same custom polynomial weight for all three operators."""
    w = ReferenceWeight("polynomial", "identity", dim, tuple(coefficients))
    return WeightTriple(w, w, w, "custom")
