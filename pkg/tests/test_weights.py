import math

import numpy as np
import pytest
from hypothesis import example, given, strategies as st
from scipy import integrate

from explicit_particles.weights import (PRESETS, ReferenceWeight, SPIKE_COEFFS, WeightDomainError,
                                        evaluate, moment, objective_F, operator_constants,
                                        optimize_polynomial, polynomial_F, polynomial_triple,
                                        preset_triple, scaled_eval, sph_normalization)

SPIKE = ReferenceWeight("spike")
MPS = ReferenceWeight("mps")


@pytest.mark.parametrize("w, r, expect", [
    (SPIKE, 0.0, 1.0), (SPIKE, 0.5, 0.25), (SPIKE, 1.0, 0.0), (SPIKE, 1.7, 0.0),
    (MPS, 0.5, 1.0), (MPS, 0.0, 0.0), (MPS, 0.25, 3.0), (MPS, 1.0, 0.0),
])
def test_eval_examples(w, r, expect):
    assert evaluate(w, r) == pytest.approx(expect, abs=1e-15)


def test_eval_rejects_negative_r():
    with pytest.raises(ValueError):
        evaluate(SPIKE, -0.1)


@pytest.mark.parametrize("d, h, r, expect", [(2, 2.0, 1.0, 0.0625), (3, 0.5, 0.0, 8.0), (2, 0.3, 0.3, 0.0)])
def test_scaled_eval(d, h, r, expect):
    assert scaled_eval(ReferenceWeight("spike", dim=d), h, r) == pytest.approx(expect)


@pytest.mark.parametrize("k, expect", [(0, math.pi / 6), (1, math.pi / 15), (2, math.pi / 30)])
def test_spike_moments_2d(k, expect):
    assert moment(SPIKE, k) == pytest.approx(expect, abs=1e-10)


def test_cubic_normalization_2d():
    assert sph_normalization("cubic", 2) == pytest.approx(40 / (7 * math.pi), abs=1e-8)


@pytest.mark.parametrize("kind, d, expect", [
    ("cubic", 3, 8 / math.pi),
    ("wendland", 2, 7 / math.pi),
    ("wendland", 3, 21 / (2 * math.pi)),
])
def test_sph_normalization_closed_forms(kind, d, expect):
    assert sph_normalization(kind, d) == pytest.approx(expect, rel=1e-10)


@pytest.mark.parametrize("kind", ["cubic", "quintic", "wendland"])
@pytest.mark.parametrize("d", [2, 3])
def test_sph_unity_condition(kind, d):
    assert moment(ReferenceWeight(kind, dim=d), 0) == pytest.approx(1.0, abs=1e-10)


def test_spike_constants():
    c = operator_constants(SPIKE, SPIKE, SPIKE, 2)
    np.testing.assert_allclose(c, (6 / math.pi, 30 / math.pi, 120 / math.pi), rtol=1e-12)


def test_mps_moments_closed_form():
    # C_k of 1/r - 1 in 2-D: 2 pi (1/(k+1) - 1/(k+2))
    for k in (0, 1, 2):
        assert moment(MPS, k) == pytest.approx(2 * math.pi * (1 / (k + 1) - 1 / (k + 2)), rel=1e-10)


def test_moment_diverges_for_over_r_mps_3d_is_fine_but_2d_k0_is_not():
    # (1/r - 1)/r behaves like r^-2: divergent against r dr in 2-D
    with pytest.raises(WeightDomainError):
        moment(MPS.with_transform("over_r"), 0, 2)


@pytest.mark.parametrize("tag", PRESETS)
def test_preset_members_vanish_outside_support(tag):
    t = preset_triple(tag)
    r = np.linspace(1.0, 3.0, 1000)
    for w in (t.interp, t.grad, t.lap):
        assert np.all(w(r) == 0.0)
        inner = np.linspace(0.0, 1.0, 1001)[1:-1]
        assert np.all(w(inner) > 0)


@pytest.mark.parametrize("tag", ["s-c", "s-q", "s-w"])
def test_sph_role_transforms_match_finite_differences(tag):
    t = preset_triple(tag)
    base = t.interp
    r = np.linspace(0.03, 0.97, 95)
    r = r[np.min(np.abs(r[:, None] - np.array([1 / 3, 0.5, 2 / 3])), axis=1) > 1e-3]
    step = 1e-6
    fd = (base(r + step) - base(r - step)) / (2 * step)
    np.testing.assert_allclose(t.grad(r), -fd, atol=1e-6 * np.abs(fd).max())
    np.testing.assert_allclose(t.lap(r), -fd / r, atol=1e-6 * np.abs(fd / r).max())


@pytest.mark.parametrize("kind", ["spike", "cubic", "quintic", "wendland", "mps"])
@pytest.mark.parametrize("k", [0, 1, 2])
def test_moment_monte_carlo(kind, k):
    w = ReferenceWeight(kind)
    if kind == "mps" and k == 0:
        k = 1
    rng = np.random.default_rng(7 + k)
    x = rng.uniform(-1, 1, (400_000, 2))
    r = np.linalg.norm(x, axis=1)
    vals = 4.0 * r ** k * w(r)
    est, se = vals.mean(), vals.std() / math.sqrt(vals.size)
    assert abs(moment(w, k) - est) < 3 * se + 1e-12


# -- objective F ---------------------------------------------------------------

def test_F_spike():
    assert objective_F(SPIKE) == pytest.approx(45.0, abs=1e-8)
    assert polynomial_F(SPIKE_COEFFS, 2) == pytest.approx(45.0, abs=1e-10)


@pytest.mark.parametrize("c", [0.5, 2.0])
def test_F_scale_invariant(c):
    a = np.array([1.0, 20.0, -43.0, 22.0])
    assert polynomial_F(c * a, 2) == pytest.approx(polynomial_F(a, 2), rel=1e-12)


def test_F_wendland_quadrature_oracle():
    w = ReferenceWeight("wendland")
    a = sph_normalization("wendland", 2)

    def base(r):
        return a * (1 - r) ** 4 * (1 + 4 * r)

    def dbase(r):
        return -20 * a * r * (1 - r) ** 3

    num, _ = integrate.quad(lambda r: r * (base(r) + 2 * abs(dbase(r))), 0, 1, epsabs=1e-14)
    den, _ = integrate.quad(lambda r: r ** 3 * base(r), 0, 1, epsabs=1e-14)
    assert objective_F(w) == pytest.approx(num / den, abs=1e-9)
    assert objective_F(w) == pytest.approx(74.4, rel=1e-9)


@pytest.mark.parametrize("kind, expect", [("cubic", 60.516129032258), ("quintic", 107.532298809)])
def test_F_sph_frozen(kind, expect):
    assert objective_F(ReferenceWeight(kind)) == pytest.approx(expect, rel=1e-8)


def test_F_rejects_mps():
    with pytest.raises(WeightDomainError):
        objective_F(MPS)


# -- optimizer -----------------------------------------------------------------

def test_optimize_degree_two_is_spike():
    a = optimize_polynomial(2)
    np.testing.assert_allclose(a / a[0], SPIKE_COEFFS)
    assert np.polyval(a[::-1], 1.0) == 0.0


def test_optimize_degree_three_beats_spike_and_grid():
    a = optimize_polynomial(3)
    F = polynomial_F(a, 2)
    assert F < 45.0
    assert F == pytest.approx(27.3612208534, rel=1e-6)
    # one free coefficient: w = (1-r)^2 (1 + c r); dense scan
    cs = np.linspace(-0.99, 60, 6000)
    grid = min(polynomial_F(np.convolve(SPIKE_COEFFS, [1, c]), 2) for c in cs)
    assert F <= grid + 1e-6
    np.testing.assert_allclose(a, [1.0, 20.3819266, -43.7638531, 22.3819266], rtol=1e-5)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_optimize_satisfies_constraints(n):
    a = optimize_polynomial(n)
    k = np.arange(a.size)
    assert a[0] == 1.0
    assert abs(a.sum()) < 1e-12
    assert abs((k * a).sum()) < 1e-12
    polynomial_triple(a)  # positivity validated at construction


def test_optimize_rejects_bad_degree():
    with pytest.raises(ValueError):
        optimize_polynomial(1)


@given(st.floats(-0.95, 50.0))
@example(2.225073858507e-311)  # subnormal leading coefficient
def test_F_of_feasible_cubic_at_least_optimum(c):
    a = np.convolve(SPIKE_COEFFS, [1.0, c])
    assert polynomial_F(a, 2) >= 27.3612208534 - 1e-6


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_spike_monotone_decreasing(r1, r2):
    lo, hi = sorted((r1, r2))
    assert SPIKE(lo) >= SPIKE(hi)


def test_polynomial_weight_validation():
    with pytest.raises(ValueError):
        ReferenceWeight("polynomial", coefficients=(1.0, -1.0))
    with pytest.raises(ValueError):
        ReferenceWeight("polynomial", coefficients=(1.0, -3.0, 2.0))  # w'(1) != 0
    with pytest.raises(ValueError):
        preset_triple("x-y")
