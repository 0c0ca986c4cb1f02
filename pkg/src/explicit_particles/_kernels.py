"""Compiled pair loops: weight evaluation, cell-list search and operator sums.

Everything here works on plain arrays so it can be jitted. Weights are passed
as ``(kind, transform, scale, coeffs)``; see ``weights.KIND_CODES``.
"""
import numpy as np
from numba import njit

SPIKE = 0
CUBIC = 1
QUINTIC = 2
WENDLAND = 3
MPS = 4
POLY = 5

IDENTITY = 0
NEG_DERIV = 1
NEG_DERIV_OVER_R = 2
OVER_R = 3


@njit(cache=True, inline="always")
def _poly(coeffs, r, order):
    # value (order 0) or derivative (order 1, 2) of sum a_k r^k, Horner form
    n = coeffs.shape[0]
    acc = 0.0
    for k in range(n - 1, order - 1, -1):
        c = coeffs[k]
        if order == 1:
            c *= k
        elif order == 2:
            c *= k * (k - 1)
        acc = acc * r + c
    return acc


@njit(cache=True, inline="always")
def base_value(kind, r, coeffs):
    if r >= 1.0:
        return 0.0
    if kind == SPIKE:
        return (1.0 - r) ** 2
    if kind == CUBIC:
        if r < 0.5:
            return 1.0 - 6.0 * r * r + 6.0 * r * r * r
        return 2.0 * (1.0 - r) ** 3
    if kind == QUINTIC:
        q = 3.0 * r
        v = (3.0 - q) ** 5
        if q < 2.0:
            v -= 6.0 * (2.0 - q) ** 5
        if q < 1.0:
            v += 15.0 * (1.0 - q) ** 5
        return v
    if kind == WENDLAND:
        return (1.0 - r) ** 4 * (1.0 + 4.0 * r)
    if kind == MPS:
        if r == 0.0:
            return 0.0
        return 1.0 / r - 1.0
    return _poly(coeffs, r, 0)


@njit(cache=True, inline="always")
def base_d1(kind, r, coeffs):
    if r >= 1.0:
        return 0.0
    if kind == SPIKE:
        return -2.0 * (1.0 - r)
    if kind == CUBIC:
        if r < 0.5:
            return -12.0 * r + 18.0 * r * r
        return -6.0 * (1.0 - r) ** 2
    if kind == QUINTIC:
        q = 3.0 * r
        v = -15.0 * (3.0 - q) ** 4
        if q < 2.0:
            v += 90.0 * (2.0 - q) ** 4
        if q < 1.0:
            v -= 225.0 * (1.0 - q) ** 4
        return v
    if kind == WENDLAND:
        return -20.0 * r * (1.0 - r) ** 3
    if kind == MPS:
        if r == 0.0:
            return 0.0
        return -1.0 / (r * r)
    return _poly(coeffs, r, 1)


@njit(cache=True, inline="always")
def base_d2(kind, r, coeffs):
    if r >= 1.0:
        return 0.0
    if kind == SPIKE:
        return 2.0
    if kind == CUBIC:
        if r < 0.5:
            return -12.0 + 36.0 * r
        return 12.0 * (1.0 - r)
    if kind == QUINTIC:
        q = 3.0 * r
        v = 180.0 * (3.0 - q) ** 3
        if q < 2.0:
            v -= 1080.0 * (2.0 - q) ** 3
        if q < 1.0:
            v += 2700.0 * (1.0 - q) ** 3
        return v
    if kind == WENDLAND:
        return (1.0 - r) ** 2 * (80.0 * r - 20.0)
    if kind == MPS:
        if r == 0.0:
            return 0.0
        return 2.0 / (r * r * r)
    return _poly(coeffs, r, 2)


@njit(cache=True, inline="always")
def weight_value(kind, tf, scale, coeffs, r):
    if r >= 1.0:
        return 0.0
    if tf == IDENTITY:
        return scale * base_value(kind, r, coeffs)
    if tf == NEG_DERIV:
        return -scale * base_d1(kind, r, coeffs)
    if r == 0.0:
        return 0.0
    if tf == NEG_DERIV_OVER_R:
        return -scale * base_d1(kind, r, coeffs) / r
    return scale * base_value(kind, r, coeffs) / r


@njit(cache=True, inline="always")
def weight_deriv(kind, tf, scale, coeffs, r):
    if r >= 1.0:
        return 0.0
    if tf == IDENTITY:
        return scale * base_d1(kind, r, coeffs)
    if tf == NEG_DERIV:
        return -scale * base_d2(kind, r, coeffs)
    if r == 0.0:
        return 0.0
    b0 = base_value(kind, r, coeffs)
    b1 = base_d1(kind, r, coeffs)
    if tf == NEG_DERIV_OVER_R:
        b2 = base_d2(kind, r, coeffs)
        return -scale * (b2 / r - b1 / (r * r))
    return scale * (b1 / r - b0 / (r * r))


@njit(cache=True)
def weight_array(kind, tf, scale, coeffs, r):
    out = np.empty(r.shape[0])
    for i in range(r.shape[0]):
        out[i] = weight_value(kind, tf, scale, coeffs, r[i])
    return out


@njit(cache=True)
def weight_deriv_array(kind, tf, scale, coeffs, r):
    out = np.empty(r.shape[0])
    for i in range(r.shape[0]):
        out[i] = weight_deriv(kind, tf, scale, coeffs, r[i])
    return out


# --------------------------------------------------------------------------
# neighbor search


@njit(cache=True, inline="always")
def _lower_bound(a, v):
    lo = 0
    hi = a.shape[0]
    while lo < hi:
        mid = (lo + hi) >> 1
        if a[mid] < v:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit(cache=True)
def _grid(pos, lo, hi, periodic, h):
    n, d = pos.shape
    origin = np.empty(d)
    cs = np.empty(d)
    nc = np.empty(d, dtype=np.int64)
    for a in range(d):
        if periodic[a]:
            m = max(int((hi[a] - lo[a]) / h), 1)
            nc[a] = m
            cs[a] = (hi[a] - lo[a]) / m
            origin[a] = lo[a]
        else:
            mn = 0.0
            mx = 0.0
            if n > 0:
                mn = pos[:, a].min()
                mx = pos[:, a].max()
            origin[a] = mn
            cs[a] = h
            nc[a] = int((mx - mn) / h) + 1
    return origin, cs, nc


@njit(cache=True, inline="always")
def _stencil(ci, nc, stride, periodic, box, keys, shifts):
    # unique neighbor cells of cell ci and the image shift that maps each
    # one next to ci; returns the count (periodic axes with < 3 cells alias)
    d = ci.shape[0]
    nk = 0
    for t in range(3 ** d):
        tt = t
        k = 0
        ok = True
        for a in range(d):
            c = ci[a] + tt % 3 - 1
            tt //= 3
            shifts[nk, a] = 0.0
            if periodic[a]:
                if c < 0:
                    c += nc[a]
                    shifts[nk, a] = -box[a]
                elif c >= nc[a]:
                    c -= nc[a]
                    shifts[nk, a] = box[a]
            elif c < 0 or c >= nc[a]:
                ok = False
                break
            k += c * stride[a]
        if not ok:
            continue
        dup = False
        for q in range(nk):
            if keys[q] == k:
                dup = True
                break
        if not dup:
            keys[nk] = k
            nk += 1
    return nk


@njit(cache=True)
def _scan(pos, spos, order, cell, cstart, skeys, dense, nc, stride, periodic, alias,
          box, h, offsets, indices, disp, dist):
    # writes CSR rows into the given buffers; returns -1 if they are too small
    n, d = pos.shape
    cap = indices.shape[0]
    h2 = h * h
    keys = np.empty(3 ** d, dtype=np.int64)
    shifts = np.zeros((3 ** d, d))
    v = np.empty(d)
    m = 0
    for i in range(n):
        nk = _stencil(cell[i], nc, stride, periodic, box, keys, shifts)
        for q in range(nk):
            k = keys[q]
            if dense:
                start = cstart[k]
                stop = cstart[k + 1]
            else:
                start = _lower_bound(skeys, k)
                stop = start
                while stop < n and skeys[stop] == k:
                    stop += 1
            for s in range(start, stop):
                r2 = 0.0
                for a in range(d):
                    va = spos[s, a] - pos[i, a]
                    if alias[a]:
                        va -= box[a] * np.floor(va / box[a] + 0.5)
                    else:
                        va += shifts[q, a]
                    v[a] = va
                    r2 += va * va
                if r2 >= h2:
                    continue
                j = order[s]
                if j == i:
                    continue
                r = np.sqrt(r2)
                if r >= h:
                    continue
                if m == cap:
                    return -1
                indices[m] = j
                for a in range(d):
                    disp[m, a] = v[a]
                dist[m] = r
                m += 1
        offsets[i + 1] = m
    return m


@njit(cache=True)
def cell_list_search(pos, lo, hi, periodic, h, indices, disp, dist):
    """Fixed-radius search on a cell grid with edge >= h (one-ring stencil).

    Fills CSR rows for every particle: all other particles at minimum-image
    distance strictly below ``h``, in cell traversal order (deterministic).
    ``indices``, ``disp`` and ``dist`` are caller-owned buffers; returns
    ``(offsets, m)`` with m the number of entries, or m = -1 when the
    buffers are too small.
    """
    n, d = pos.shape
    origin, cs, nc = _grid(pos, lo, hi, periodic, h)
    box = hi - lo
    stride = np.empty(d, dtype=np.int64)
    ncell = 1
    for a in range(d):
        stride[a] = ncell
        ncell *= nc[a]
    alias = np.zeros(d, dtype=np.bool_)
    for a in range(d):
        alias[a] = periodic[a] and nc[a] < 3

    cell = np.empty((n, d), dtype=np.int64)
    ckey = np.empty(n, dtype=np.int64)
    for i in range(n):
        k = 0
        for a in range(d):
            c = int(np.floor((pos[i, a] - origin[a]) / cs[a]))
            if periodic[a]:
                c = c % nc[a]
            else:
                c = min(max(c, 0), nc[a] - 1)
            cell[i, a] = c
            k += c * stride[a]
        ckey[i] = k
    order = np.argsort(ckey, kind="mergesort")
    skeys = ckey[order]
    spos = np.empty((n, d))
    for s in range(n):
        spos[s] = pos[order[s]]
    # dense cell-start table when the grid is small, binary search otherwise
    dense = ncell <= 8 * n + 4096
    cstart = np.zeros(ncell + 1 if dense else 1, dtype=np.int64)
    if dense:
        for s in range(n):
            cstart[skeys[s] + 1] += 1
        for c in range(ncell):
            cstart[c + 1] += cstart[c]

    offsets = np.zeros(n + 1, dtype=np.int64)
    m = _scan(pos, spos, order, cell, cstart, skeys, dense, nc, stride, periodic, alias,
              box, h, offsets, indices, disp, dist)
    return offsets, m


@njit(cache=True)
def sort_rows(offsets, indices, disp, dist):
    n = offsets.shape[0] - 1
    for i in range(n):
        a = offsets[i]
        b = offsets[i + 1]
        if b - a < 2:
            continue
        perm = np.argsort(indices[a:b], kind="mergesort") + a
        indices[a:b] = indices[perm]
        disp[a:b] = disp[perm]
        dist[a:b] = dist[perm]


# --------------------------------------------------------------------------
# operator sums; constants are applied by the caller


@njit(cache=True)
def kernel_sum(offsets, indices, dist, vol, phi, kind, tf, scale, coeffs, h, d,
               self_weight):
    """sum_j V_j phi_j w_h(r_ij) + V_i phi_i * self_weight, per component."""
    n = offsets.shape[0] - 1
    m = phi.shape[1]
    out = np.zeros((n, m))
    hd = h ** (-d)
    for i in range(n):
        for c in range(m):
            out[i, c] = vol[i] * phi[i, c] * self_weight
        for p in range(offsets[i], offsets[i + 1]):
            j = indices[p]
            w = hd * weight_value(kind, tf, scale, coeffs, dist[p] / h)
            for c in range(m):
                out[i, c] += vol[j] * phi[j, c] * w
    return out


@njit(cache=True)
def shepard_sum(offsets, indices, dist, vol, phi, kind, tf, scale, coeffs, h, d,
                self_weight):
    """Normalized kernel average; rows with zero denominator return NaN."""
    n = offsets.shape[0] - 1
    m = phi.shape[1]
    out = np.zeros((n, m))
    hd = h ** (-d)
    for i in range(n):
        den = vol[i] * self_weight
        for c in range(m):
            out[i, c] = vol[i] * phi[i, c] * self_weight
        for p in range(offsets[i], offsets[i + 1]):
            j = indices[p]
            w = vol[j] * hd * weight_value(kind, tf, scale, coeffs, dist[p] / h)
            den += w
            for c in range(m):
                out[i, c] += phi[j, c] * w
        if den > 0.0:
            for c in range(m):
                out[i, c] /= den
        else:
            for c in range(m):
                out[i, c] = np.nan
    return out


@njit(cache=True)
def difference_sum(offsets, indices, dist, vol, phi, kind, tf, scale, coeffs, h, d):
    """sum_{j != i} V_j (phi_j - phi_i) w_h(r_ij)."""
    n = offsets.shape[0] - 1
    m = phi.shape[1]
    out = np.zeros((n, m))
    hd = h ** (-d)
    for i in range(n):
        for p in range(offsets[i], offsets[i + 1]):
            j = indices[p]
            w = vol[j] * hd * weight_value(kind, tf, scale, coeffs, dist[p] / h)
            for c in range(m):
                out[i, c] += (phi[j, c] - phi[i, c]) * w
    return out


@njit(cache=True)
def directional_sum(offsets, indices, disp, dist, vol, phi, kind, tf, scale,
                    coeffs, h, d, sign):
    """sum_{j != i} V_j (phi_j + sign*phi_i) e_ij w_h(r_ij), e_ij the unit vector."""
    n = offsets.shape[0] - 1
    m = phi.shape[1]
    out = np.zeros((n, m, d))
    hd = h ** (-d)
    for i in range(n):
        for p in range(offsets[i], offsets[i + 1]):
            j = indices[p]
            r = dist[p]
            if r == 0.0:
                continue
            w = vol[j] * hd * weight_value(kind, tf, scale, coeffs, r / h) / r
            for c in range(m):
                f = (phi[j, c] + sign * phi[i, c]) * w
                for a in range(d):
                    out[i, c, a] += f * disp[p, a]
    return out
