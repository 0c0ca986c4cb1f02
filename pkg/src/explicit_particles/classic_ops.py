"""Conventional SPH and MPS operators written out pair by pair.

These are dense O(N^2) all-pairs sums with their own closed-form
kernels, independent of the compiled path in ``operators``. They exist as
reference implementations for equivalence tests; the generalized operators
reduce to them for the matching weight choices.

Conventions: in the SPH gradient the kernel gradient is taken with respect to
x_i; in the SPH Laplacian it is the gradient of W_h evaluated at x_j - x_i
(Morris form). MPS uses lambda_0 = C_2(w_h) / C_0(w_h), the usual MPS
definition of the Laplacian model constant.
"""
from __future__ import annotations

import math

import numpy as np

from .weights import sph_normalization, surface_area


def _spline(kind, q):
    """Unnormalized SPH base kernel and its derivative on q in [0, 1)."""
    q = np.asarray(q, dtype=float)
    w = np.zeros_like(q)
    dw = np.zeros_like(q)
    m = q < 1.0
    if kind == "cubic":
        a = m & (q < 0.5)
        b = m & (q >= 0.5)
        w[a] = 1 - 6 * q[a] ** 2 + 6 * q[a] ** 3
        dw[a] = -12 * q[a] + 18 * q[a] ** 2
        w[b] = 2 * (1 - q[b]) ** 3
        dw[b] = -6 * (1 - q[b]) ** 2
    elif kind == "quintic":
        t = 3 * q
        for c, coef in ((3.0, 1.0), (2.0, -6.0), (1.0, 15.0)):
            s = m & (t < c)
            w[s] += coef * (c - t[s]) ** 5
            dw[s] += -15 * coef * (c - t[s]) ** 4
    elif kind == "wendland":
        w[m] = (1 - q[m]) ** 4 * (1 + 4 * q[m])
        dw[m] = -20 * q[m] * (1 - q[m]) ** 3
    else:
        raise ValueError(f"not an SPH kernel: {kind!r}")
    return w, dw


def _pairs(positions):
    x = np.asarray(positions, dtype=float)
    v = x[None, :, :] - x[:, None, :]  # v[i, j] = x_j - x_i
    r = np.sqrt((v * v).sum(axis=2))
    return v, r


def sph_kernel(kind, h, r, d=2):
    """W_h(r) and dW_h/dr for a normalized SPH base kernel."""
    a = sph_normalization(kind, d)
    w, dw = _spline(kind, np.asarray(r, dtype=float) / h)
    return a * h ** -d * w, a * h ** (-d - 1) * dw


def _offdiag(r, h):
    """Mask of pairs j != i with r_ij < h, and r with the diagonal set to 1."""
    n = r.shape[0]
    m = (r < h) & ~np.eye(n, dtype=bool)
    return m, np.where(m, r, 1.0)


def sph_interpolate_direct(positions, masses, densities, phi, kind, h):
    """sum_j (m_j/rho_j) phi_j W_h(|x_j - x_i|), j = i included."""
    x = np.asarray(positions, dtype=float)
    vol = np.asarray(masses, float) / np.asarray(densities, float)
    _, r = _pairs(x)
    W, _ = sph_kernel(kind, h, r, x.shape[1])
    return W @ (vol * np.asarray(phi, float))


def sph_gradient_direct(positions, masses, densities, phi, kind, h):
    """sum_{j != i} (m_j/rho_j)(phi_j - phi_i) grad_{x_i} W_h(|x_j - x_i|)."""
    x = np.asarray(positions, dtype=float)
    phi = np.asarray(phi, float)
    vol = np.asarray(masses, float) / np.asarray(densities, float)
    v, r = _pairs(x)
    m, rs = _offdiag(r, h)
    _, dW = sph_kernel(kind, h, r, x.shape[1])
    # grad_{x_i} W(|x_j - x_i|) = -W'(r) (x_j - x_i)/r
    coef = np.where(m, vol[None, :] * (phi[None, :] - phi[:, None]) * -dW / rs, 0.0)
    return np.einsum("ij,ijk->ik", coef, v)


def sph_laplacian_direct(positions, masses, densities, phi, kind, h):
    """2 sum_{j != i} (m_j/rho_j)(phi_i - phi_j)/r_ij e_ij . grad W_h(x_j - x_i)."""
    x = np.asarray(positions, dtype=float)
    phi = np.asarray(phi, float)
    vol = np.asarray(masses, float) / np.asarray(densities, float)
    _, r = _pairs(x)
    m, rs = _offdiag(r, h)
    _, dW = sph_kernel(kind, h, r, x.shape[1])
    # e . grad W(x_j - x_i) = W'(r) for the unit vector e along x_j - x_i
    terms = np.where(m, 2.0 * vol[None, :] * (phi[:, None] - phi[None, :]) / rs * dW, 0.0)
    return terms.sum(axis=1)


def mps_weight(h, r, d=2):
    """w_h(r) = h^-d (h/r - 1) for 0 < r < h, else 0."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    m = (r > 0) & (r < h)
    out[m] = h ** -d * (h / r[m] - 1.0)
    return out


def mps_moments(d=2):
    """Closed-form C_0 and C_2 of the reference MPS weight 1/r - 1."""
    s = surface_area(d)
    return s * (1.0 / (d - 1) - 1.0 / d), s * (1.0 / (d + 1) - 1.0 / (d + 2))


def mps_parameters(h, n0, d=2):
    """(volume, lambda_0) consistent with a given n_0: V = C_0(w_h)/n_0 and
    lambda_0 = C_2(w_h)/C_0(w_h) = h^2 C_2(w)/C_0(w)."""
    c0, c2 = mps_moments(d)
    return c0 / n0, h * h * c2 / c0


def mps_gradient_direct(positions, phi, h, n0):
    """(d/n_0) sum_{j != i} (phi_j - phi_i)/r_ij e_ij w_h(r_ij)."""
    x = np.asarray(positions, dtype=float)
    phi = np.asarray(phi, float)
    d = x.shape[1]
    v, r = _pairs(x)
    m, rs = _offdiag(r, h)
    m &= r > 0
    coef = np.where(m, (phi[None, :] - phi[:, None]) / rs ** 2 * mps_weight(h, r, d), 0.0)
    return d / n0 * np.einsum("ij,ijk->ik", coef, v)


def mps_laplacian_direct(positions, phi, h, n0, lambda0):
    """(2d/(n_0 lambda_0)) sum_{j != i} (phi_j - phi_i) w_h(r_ij)."""
    x = np.asarray(positions, dtype=float)
    phi = np.asarray(phi, float)
    d = x.shape[1]
    _, r = _pairs(x)
    w = mps_weight(h, r, d)
    np.fill_diagonal(w, 0.0)
    return 2.0 * d / (n0 * lambda0) * (w * (phi[None, :] - phi[:, None])).sum(axis=1)


def mps_number_density_reference(h, dx, d=2):
    """n_0 = sum over an ideal lattice of w_h, the classic MPS rest density."""
    m = int(math.ceil(h / dx))
    ax = np.arange(-m, m + 1, dtype=float) * dx
    grids = np.meshgrid(*([ax] * d), indexing="ij")
    r = np.sqrt(sum(g * g for g in grids)).ravel()
    return float(mps_weight(h, r, d).sum())
