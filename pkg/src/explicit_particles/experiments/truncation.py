"""Laplacian truncation error on exact and randomly perturbed lattices."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import DomainSpec, ParticleSystem, build_neighbor_list, lattice_init
from ..operators import OperatorSet
from ..weights import WeightTriple, preset_triple

DX = 2.0 ** -4
H_STRIP = 3 * DX


def perturbed_lattice(dx=DX, eps_max=0.0, seed=0, H=None) -> ParticleSystem:
    """Cell-centred lattice on the unit square plus a strip of width H
    (default 3 dx), each coordinate shifted by (eps/2) dx with eps uniform
    in [-eps_max, eps_max]. Kinds follow the unperturbed lattice."""
    if not 0.0 <= eps_max < 1.0:
        raise ValueError("eps_max must lie in [0, 1)")
    H = 3 * dx if H is None else H
    dom = DomainSpec((0.0, 0.0), (1.0, 1.0), (False, False), H)
    sys_ = lattice_init(dom, dx, include_dummy_layers=True)
    if eps_max > 0.0:
        rng = np.random.default_rng(seed)
        eps = rng.uniform(-eps_max, eps_max, size=sys_.positions.shape)
        sys_.positions += 0.5 * eps * dx
    return sys_


def _phi(x):
    return np.sin(2 * np.pi * (x[:, 0] + x[:, 1]))


def _lap_phi(x):
    return -8 * np.pi ** 2 * _phi(x)


def relative_truncation_error(system: ParticleSystem, triple: WeightTriple, h, H=None) -> float:
    """max_i |lap phi - lap_h phi| / max_i |lap phi| over fluid particles."""
    H = 3 * DX if H is None else H
    dom = DomainSpec((0.0, 0.0), (1.0, 1.0), (False, False), H)
    nl = build_neighbor_list(system.positions, dom, h)
    ops = OperatorSet(triple, h)
    x = system.positions
    lap_h = ops.laplacian(system, nl, _phi(x))
    fl = system.fluid
    exact = _lap_phi(x[fl])
    return float(np.max(np.abs(lap_h[fl] - exact)) / np.max(np.abs(exact)))


@dataclass
class TruncationResult:
    preset: str
    h_factor: float
    eps_max: float
    seeds: list
    errors: list

    @property
    def mean(self) -> float:
        return float(np.mean(self.errors))


def truncation_error_study(preset="g-s", h_factor=3.1, eps_max=0.0, seeds=(0,), dx=DX):
    """Relative laplacian truncation error of ``preset`` for each seed.

    With eps_max = 0 the lattice is exact and only one evaluation is made,
    repeated for every seed.
    """
    triple = preset_triple(preset) if isinstance(preset, str) else preset
    tag = preset if isinstance(preset, str) else triple.tag
    seeds = list(seeds) or [0]
    h = h_factor * dx
    if eps_max == 0.0:
        e = relative_truncation_error(perturbed_lattice(dx, 0.0), triple, h, 3 * dx)
        errs = [e] * len(seeds)
    else:
        errs = [relative_truncation_error(perturbed_lattice(dx, eps_max, s), triple, h, 3 * dx)
                for s in seeds]
    return TruncationResult(tag, h_factor, eps_max, seeds, errs)
