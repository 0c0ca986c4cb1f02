"""Particle state, domain geometry, lattice set-up and neighbor search."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from . import _kernels


class ConfigurationError(ValueError):
    """Invalid geometric or numerical configuration."""


class ParticleKind(IntEnum):
    FLUID = 0
    BOUNDARY = 1


@dataclass(frozen=True)
class DomainSpec:
    """Box ``[box_lo, box_hi]`` with per-axis periodicity.

    ``H`` is the width of the expanded strip that holds dummy particles along
    non-periodic axes. It may be zero for a fully periodic box.
    """

    box_lo: tuple
    box_hi: tuple
    periodic: tuple
    H: float = 0.0

    def __post_init__(self):
        lo = tuple(float(v) for v in self.box_lo)
        hi = tuple(float(v) for v in self.box_hi)
        per = tuple(bool(v) for v in self.periodic)
        object.__setattr__(self, "box_lo", lo)
        object.__setattr__(self, "box_hi", hi)
        object.__setattr__(self, "periodic", per)
        if not (len(lo) == len(hi) == len(per)) or len(lo) not in (2, 3):
            raise ConfigurationError("domain must be 2-D or 3-D with matching bounds")
        if any(a >= b for a, b in zip(lo, hi)):
            raise ConfigurationError("box_lo must be < box_hi componentwise")
        if self.H < 0 or (not all(per) and self.H <= 0):
            raise ConfigurationError("H > 0 is required when an axis is non-periodic")

    @classmethod
    def unit_square(cls, periodic=True, H=0.0):
        return cls((0.0, 0.0), (1.0, 1.0), (periodic, periodic), H)

    @property
    def dim(self) -> int:
        return len(self.box_lo)

    @property
    def lo(self) -> np.ndarray:
        return np.asarray(self.box_lo)

    @property
    def hi(self) -> np.ndarray:
        return np.asarray(self.box_hi)

    @property
    def lengths(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def expanded_lo(self) -> np.ndarray:
        return np.where(self.periodic, self.lo, self.lo - self.H)

    @property
    def expanded_hi(self) -> np.ndarray:
        return np.where(self.periodic, self.hi, self.hi + self.H)

    def volume(self, expanded=False) -> float:
        if expanded:
            return float(np.prod(self.expanded_hi - self.expanded_lo))
        return float(np.prod(self.lengths))

    def inside(self, x) -> np.ndarray:
        """True where points lie in the open primary box (periodic axes always pass)."""
        x = np.atleast_2d(x)
        ok = (x > self.lo) & (x < self.hi)
        ok |= np.asarray(self.periodic)
        return ok.all(axis=1)


@dataclass
class ParticleSystem:
    positions: np.ndarray
    velocities: np.ndarray
    pressures: np.ndarray
    volumes: np.ndarray
    kinds: np.ndarray

    def __post_init__(self):
        self.positions = np.ascontiguousarray(self.positions, dtype=float)
        n, d = self.positions.shape
        self.velocities = np.ascontiguousarray(self.velocities, dtype=float).reshape(n, d)
        self.pressures = np.ascontiguousarray(self.pressures, dtype=float).reshape(n)
        self.volumes = np.ascontiguousarray(self.volumes, dtype=float).reshape(n)
        self.kinds = np.ascontiguousarray(self.kinds, dtype=np.int8).reshape(n)
        if np.any(self.volumes <= 0):
            raise ConfigurationError("particle volumes must be strictly positive")

    @classmethod
    def at_rest(cls, positions, volumes, kinds=None):
        positions = np.asarray(positions, dtype=float)
        n = positions.shape[0]
        volumes = np.broadcast_to(np.asarray(volumes, dtype=float), (n,)).copy()
        if kinds is None:
            kinds = np.full(n, ParticleKind.FLUID, dtype=np.int8)
        return cls(positions, np.zeros_like(positions), np.zeros(n), volumes, kinds)

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    @property
    def fluid(self) -> np.ndarray:
        return self.kinds == ParticleKind.FLUID

    @property
    def boundary(self) -> np.ndarray:
        return self.kinds == ParticleKind.BOUNDARY

    def copy(self) -> "ParticleSystem":
        return ParticleSystem(self.positions.copy(), self.velocities.copy(),
                              self.pressures.copy(), self.volumes.copy(),
                              self.kinds.copy())

    def subset(self, mask) -> "ParticleSystem":
        return ParticleSystem(self.positions[mask], self.velocities[mask],
                              self.pressures[mask], self.volumes[mask],
                              self.kinds[mask])


@dataclass
class NeighborList:
    """Compressed per-particle neighbor rows.

    Row ``i`` occupies ``offsets[i]:offsets[i+1]`` of ``indices`` (neighbor
    index j), ``disp`` (minimum-image x_j - x_i) and ``dist`` (|x_j - x_i|).
    """

    offsets: np.ndarray
    indices: np.ndarray
    disp: np.ndarray
    dist: np.ndarray
    h: float
    cell_size: np.ndarray = field(default=None)
    buffer: object = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.offsets.shape[0] - 1

    @property
    def counts(self) -> np.ndarray:
        return np.diff(self.offsets)

    def neighbors(self, i):
        sl = slice(self.offsets[i], self.offsets[i + 1])
        return self.indices[sl], self.disp[sl]

    def row_ids(self) -> np.ndarray:
        return np.repeat(np.arange(self.n), self.counts)

    def pair_set(self) -> set:
        return set(zip(self.row_ids().tolist(), self.indices.tolist()))


def min_image_displacement(x, y, domain: DomainSpec) -> np.ndarray:
    """``y - x`` reduced by whole box lengths on periodic axes."""
    v = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
    L = domain.lengths
    per = np.asarray(domain.periodic)
    shift = L * np.floor(v / L + 0.5)
    return np.where(per, v - shift, v)


def wrap_position(x, domain: DomainSpec) -> np.ndarray:
    """Map periodic coordinates into the half-open box ``[lo, hi)``."""
    x = np.asarray(x, dtype=float)
    lo, L = domain.lo, domain.lengths
    wrapped = lo + np.mod(x - lo, L)
    # mod can round up to exactly L for tiny negative offsets
    wrapped = np.where(wrapped >= domain.hi, wrapped - L, wrapped)
    return np.where(np.asarray(domain.periodic), wrapped, x)


def lattice_init(domain: DomainSpec, dx: float, include_dummy_layers=False) -> ParticleSystem:
    """Particles at cell centres ``(i - 1/2) dx`` of a square/cubic lattice.

    Fluid particles fill the primary box. With ``include_dummy_layers`` the
    lattice is continued into the expanded strip (width ``H``) on every
    non-periodic axis and those particles are marked as boundary.
    """
    if dx <= 0:
        raise ConfigurationError("dx must be positive")
    if np.any(dx > domain.lengths):
        raise ConfigurationError("dx exceeds a box edge")
    if include_dummy_layers and not all(domain.periodic) and domain.H < dx:
        raise ConfigurationError("dummy layers need H >= dx")

    axes = []
    for a in range(domain.dim):
        lo, hi = domain.box_lo[a], domain.box_hi[a]
        n_in = int(np.floor((hi - lo) / dx + 1e-9))
        if include_dummy_layers and not domain.periodic[a]:
            # points (k - 1/2) dx strictly inside the strip of width H
            n_out = int(np.ceil(domain.H / dx + 0.5 - 1e-9)) - 1
            idx = np.arange(-n_out, n_in + n_out)
        else:
            idx = np.arange(n_in)
        axes.append(lo + (idx + 0.5) * dx)

    grid = np.meshgrid(*axes, indexing="ij")
    pos = np.stack([g.ravel(order="F") for g in grid], axis=1)
    kinds = np.where(domain.inside(pos), ParticleKind.FLUID, ParticleKind.BOUNDARY)
    return ParticleSystem.at_rest(pos, dx ** domain.dim, kinds.astype(np.int8))


class NeighborBuffer:
    """Reusable storage for neighbor rows.

    A NeighborList built into a buffer holds views of it, so it stays valid
    only until the buffer is used for the next build.
    """

    def __init__(self, dim: int, capacity: int = 0):
        self.dim = dim
        self._alloc(capacity)

    def _alloc(self, capacity):
        self.capacity = int(capacity)
        self.indices = np.empty(self.capacity, dtype=np.int64)
        self.disp = np.empty((self.capacity, self.dim))
        self.dist = np.empty(self.capacity)

    def grow(self, capacity):
        self._alloc(max(int(capacity), int(1.5 * self.capacity) + 1024))


def _expected_pairs(pos, domain, h):
    n, d = pos.shape
    if n < 2:
        return 1024
    span = np.where(domain.periodic, domain.lengths, np.ptp(pos, axis=0) + h)
    ball = np.pi * h * h if d == 2 else 4.0 / 3.0 * np.pi * h ** 3
    return int(1.3 * n * n * ball / float(np.prod(span))) + 16 * n + 1024


def build_neighbor_list(positions, domain: DomainSpec, h: float, sort=True,
                        buffer: NeighborBuffer | None = None) -> NeighborList:
    """All pairs with minimum-image distance strictly below ``h``.

    ``positions`` may be a ParticleSystem or an (N, d) array. Rows are sorted
    by neighbor index unless ``sort=False`` (the solver skips it; traversal
    order is already deterministic). With a ``buffer`` the returned arrays
    are views into it; otherwise they are freshly allocated.
    """
    if isinstance(positions, ParticleSystem):
        positions = positions.positions
    if h <= 0:
        raise ConfigurationError("h must be positive")
    per = np.asarray(domain.periodic)
    if np.any(per & (h >= 0.5 * domain.lengths)):
        raise ConfigurationError("h must be below half of every periodic edge")
    pos = np.ascontiguousarray(positions, dtype=float)
    own = buffer is None
    if own:
        buffer = NeighborBuffer(pos.shape[1], _expected_pairs(pos, domain, h))
    while True:
        offsets, m = _kernels.cell_list_search(pos, domain.lo, domain.hi, per, float(h),
                                               buffer.indices, buffer.disp, buffer.dist)
        if m >= 0:
            break
        buffer.grow(2 * buffer.capacity)
    indices, disp, dist = buffer.indices[:m], buffer.disp[:m], buffer.dist[:m]
    if own:
        indices, disp, dist = indices.copy(), disp.copy(), dist.copy()
    if sort:
        _kernels.sort_rows(offsets, indices, disp, dist)
    cs = np.where(per, domain.lengths / np.maximum(np.floor(domain.lengths / h), 1), h)
    return NeighborList(offsets, indices, disp, dist, float(h), cs, None if own else buffer)


def brute_force_pairs(positions, domain: DomainSpec, h: float) -> set:
    """O(N^2) reference for the neighbor search."""
    pos = np.asarray(positions, dtype=float)
    pairs = set()
    for i in range(pos.shape[0]):
        v = min_image_displacement(pos[i], pos, domain)
        r = np.sqrt((v * v).sum(axis=1))
        for j in np.nonzero(r < h)[0]:
            if j != i:
                pairs.add((i, int(j)))
    return pairs


def min_pair_distance(system, domain: DomainSpec) -> float:
    """Smallest minimum-image distance over all particle pairs (r_min)."""
    pos = system.positions if isinstance(system, ParticleSystem) else np.asarray(system, float)
    n = pos.shape[0]
    if n < 2:
        raise ValueError("need at least two particles")
    best = np.inf
    for i in range(n - 1):
        v = min_image_displacement(pos[i], pos[i + 1:], domain)
        best = min(best, float(np.sqrt((v * v).sum(axis=1)).min()))
    return best

