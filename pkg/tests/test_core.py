import numpy as np
import pytest
from hypothesis import given, strategies as st

from explicit_particles.core import (ConfigurationError, DomainSpec, NeighborBuffer, ParticleKind,
                                     ParticleSystem, brute_force_pairs, build_neighbor_list,
                                     lattice_init, min_image_displacement, min_pair_distance,
                                     wrap_position)

PERIODIC = DomainSpec.unit_square(periodic=True)
WALLED = DomainSpec((0.0, 0.0), (1.0, 1.0), (False, False), 0.1)


# -- domain / lattice --------------------------------------------------------

def test_domain_rejects_bad_bounds():
    with pytest.raises(ConfigurationError):
        DomainSpec((0, 0), (1, 0), (True, True))
    with pytest.raises(ConfigurationError):
        DomainSpec((0, 0), (1, 1), (False, True), 0.0)


def test_lattice_625_particles():
    s = lattice_init(PERIODIC, 0.04)
    assert s.n == 625
    assert np.all(s.kinds == ParticleKind.FLUID)
    assert s.volumes.sum() == pytest.approx(1.0, rel=1e-9)


def test_lattice_four_points():
    s = lattice_init(PERIODIC, 0.5)
    expect = {(0.25, 0.25), (0.75, 0.25), (0.25, 0.75), (0.75, 0.75)}
    assert {tuple(p) for p in s.positions.tolist()} == expect


def test_lattice_with_dummy_layers():
    s = lattice_init(WALLED, 0.1, include_dummy_layers=True)
    assert s.fluid.sum() == 100
    assert s.boundary.sum() == 44
    assert s.volumes.sum() == pytest.approx(WALLED.volume(expanded=True), rel=1e-9)


def test_lattice_rejects_coarse_dx():
    with pytest.raises(ConfigurationError):
        lattice_init(PERIODIC, 1.5)
    with pytest.raises(ConfigurationError):
        lattice_init(DomainSpec((0, 0), (1, 1), (False, False), 0.05), 0.1, include_dummy_layers=True)


def test_particle_volumes_positive():
    with pytest.raises(ConfigurationError):
        ParticleSystem.at_rest(np.zeros((2, 2)), [1.0, 0.0])


# -- periodic geometry -------------------------------------------------------

@pytest.mark.parametrize("x, y, expect, dom", [
    ((0.95, 0.5), (0.05, 0.5), (0.1, 0.0), PERIODIC),
    ((0.0, 0.0), (0.3, 0.4), (0.3, 0.4), WALLED),
    ((0.5, 0.5), (0.5, 0.5), (0.0, 0.0), PERIODIC),
])
def test_min_image_examples(x, y, expect, dom):
    np.testing.assert_allclose(min_image_displacement(x, y, dom), expect, atol=1e-15)


@pytest.mark.parametrize("x, expect", [
    ((1.02, 0.5), (0.02, 0.5)),
    ((-0.01, 0.99), (0.99, 0.99)),
    ((0.4, 0.6), (0.4, 0.6)),
    ((1.0, 0.0), (0.0, 0.0)),
])
def test_wrap_examples(x, expect):
    np.testing.assert_allclose(wrap_position(np.array(x), PERIODIC), expect, atol=1e-14)


coord = st.floats(-3.0, 3.0, allow_nan=False)


@given(st.tuples(coord, coord), st.tuples(coord, coord))
def test_min_image_antisymmetric_and_bounded(x, y):
    x, y = np.mod(x, 1.0), np.mod(y, 1.0)
    a = min_image_displacement(x, y, PERIODIC)
    b = min_image_displacement(y, x, PERIODIC)
    # a = -b except at exact half-box ties, where +-1/2 are both minimal
    tie = np.isclose(np.abs(a), 0.5, atol=1e-12)
    np.testing.assert_allclose(np.where(tie, np.abs(a), a), np.where(tie, np.abs(b), -b), atol=1e-12)
    assert np.all(np.abs(a) <= 0.5 + 1e-12)


@given(st.tuples(coord, coord))
def test_wrap_idempotent(x):
    w = wrap_position(np.array(x), PERIODIC)
    assert np.all((w >= 0) & (w < 1))
    np.testing.assert_array_equal(wrap_position(w, PERIODIC), w)


# -- neighbor search -----------------------------------------------------------

def test_two_particles_within_radius():
    nl = build_neighbor_list(np.array([[0.2, 0.2], [0.5, 0.2]]), WALLED, 0.5)
    assert nl.pair_set() == {(0, 1), (1, 0)}
    np.testing.assert_allclose(nl.disp[0], (0.3, 0.0))


def test_two_particles_at_radius_excluded():
    nl = build_neighbor_list(np.array([[0.25, 0.2], [0.75, 0.2]]), WALLED, 0.5)
    assert nl.indices.size == 0


def test_periodic_radius_too_large():
    with pytest.raises(ConfigurationError):
        build_neighbor_list(np.array([[0.1, 0.1]]), PERIODIC, 0.5)


@pytest.mark.parametrize("dom", [PERIODIC, WALLED, DomainSpec((0, 0), (1, 1), (True, False), 0.1),
                                 DomainSpec((0, 0, 0), (1, 1, 1), (True, True, True))])
@pytest.mark.parametrize("h", [0.05, 0.2, 0.45])
def test_neighbor_list_matches_brute_force(dom, h, rng):
    n = 200 if dom.dim == 2 else 150
    x = dom.expanded_lo + rng.random((n, dom.dim)) * (dom.expanded_hi - dom.expanded_lo)
    nl = build_neighbor_list(x, dom, h)
    assert nl.pair_set() == brute_force_pairs(x, dom, h)
    rows = nl.row_ids()
    np.testing.assert_allclose(nl.disp, min_image_displacement(x[rows], x[nl.indices], dom),
                               atol=1e-14)
    np.testing.assert_allclose(nl.dist, np.linalg.norm(nl.disp, axis=1), rtol=1e-14)


def test_neighbor_list_symmetric_and_sorted(rng):
    x = rng.random((300, 2))
    nl = build_neighbor_list(x, PERIODIC, 0.1)
    pairs = nl.pair_set()
    assert all((j, i) in pairs for i, j in pairs)
    assert all(i != j for i, j in pairs)
    for i in range(nl.n):
        idx, _ = nl.neighbors(i)
        assert np.all(np.diff(idx) > 0)


def test_neighbor_buffer_grows(rng):
    x = rng.random((400, 2))
    buf = NeighborBuffer(2, capacity=8)
    nl = build_neighbor_list(x, PERIODIC, 0.15, buffer=buf)
    assert buf.capacity >= nl.indices.size
    assert nl.pair_set() == build_neighbor_list(x, PERIODIC, 0.15).pair_set()


def test_lattice_neighbor_counts_uniform():
    s = lattice_init(PERIODIC, 0.04)
    nl = build_neighbor_list(s, PERIODIC, 3.1 * 0.04)
    # every particle sees the same 28 lattice points with |z| < 3.1
    assert np.all(nl.counts == 28)


# -- r_min -------------------------------------------------------------------

def test_min_pair_distance_lattice():
    assert min_pair_distance(lattice_init(PERIODIC, 0.04), PERIODIC) == pytest.approx(0.04)


def test_min_pair_distance_collinear():
    x = np.array([[0.0, 0.0], [0.1, 0.0], [0.25, 0.0]])
    assert min_pair_distance(x, WALLED) == pytest.approx(0.1)


def test_min_pair_distance_perturbed_matches_brute_force(rng):
    s = lattice_init(PERIODIC, 1 / 23)
    x = wrap_position(s.positions[:500] + rng.uniform(-0.01, 0.01, (500, 2)), PERIODIC)
    best = min(np.linalg.norm(min_image_displacement(x[i], x[j], PERIODIC))
               for i in range(500) for j in range(i + 1, 500))
    assert min_pair_distance(x, PERIODIC) == best


def test_min_pair_distance_needs_two():
    with pytest.raises(ValueError):
        min_pair_distance(np.zeros((1, 2)), PERIODIC)
