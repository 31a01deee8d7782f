import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from narain_os.errors import CapExceeded, PoleHit, PreconditionViolated
from narain_os.geometry import (
    MoebiusMap,
    bump_bound,
    bump_derivative,
    bump_psi_tilde,
    cayley,
    cayley_inv,
    direction_margin,
    double_factorial,
    g_plus_derivative_terms,
    good_direction,
    inversion,
    jacobian_J,
    moebius_apply,
    ns_dilation,
    ns_dilation_factored,
    radial_ratio_bound,
    radial_shift,
    reflect_circle,
    stereographic,
    theta,
    translation,
)

cplx = st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False)


def test_moebius_examples():
    assert moebius_apply(MoebiusMap(1, 0, 0, 1), 0.3 + 0.2j)[0] == 0.3 + 0.2j
    assert translation(1 - 2j).apply(0.5)[0] == pytest.approx(1.5 - 2j)
    assert inversion().apply(2j)[0] == pytest.approx(-1 / 2j)
    with pytest.raises(PoleHit):
        inversion().apply(0)


@given(cplx, cplx, cplx, cplx, cplx)
def test_moebius_normalized(a, b, c, d, z):
    if abs(a * d - b * c) < 1e-3:
        return
    g = MoebiusMap(a, b, c, d)
    assert abs(g.det - 1) < 1e-12


@given(st.lists(cplx, min_size=8, max_size=8), cplx)
def test_moebius_composition(coef, z):
    a, b, c, d, e, f, g_, h = coef
    if abs(a * d - b * c) < 1e-2 or abs(e * h - f * g_) < 1e-2:
        return
    g1, g2 = MoebiusMap(a, b, c, d), MoebiusMap(e, f, g_, h)
    try:
        inner = g2.apply(z)[0]
        outer = g1.apply(inner)[0]
        comp = (g1 @ g2).apply(z)[0]
    except PoleHit:
        return
    if abs(outer) > 1e6:
        return
    assert comp == pytest.approx(outer, rel=1e-9, abs=1e-9)


def test_derivative_formula():
    g = MoebiusMap(2, 1, 1, 1)
    z, h = 0.3 + 0.4j, 1e-6
    fd = (g.apply(z + h)[0] - g.apply(z - h)[0]) / (2 * h)
    assert g.apply(z)[1] == pytest.approx(fd, rel=1e-8)


@pytest.mark.parametrize("lam", [-1.0, 0.2, 0.7])
def test_ns_dilation_factorization(lam):
    M = ns_dilation(lam).matrix
    np.testing.assert_allclose(M, ns_dilation_factored(lam), atol=1e-12)
    for z in (1.0, -1.0):
        assert ns_dilation(lam).apply(z)[0] == pytest.approx(z)


def test_cayley_examples():
    assert cayley(0) == 1
    assert cayley(-1) == 0
    with pytest.raises(PoleHit):
        cayley(1)
    with pytest.raises(PoleHit):
        cayley_inv(-1)


def test_cayley_reflection_identity():
    rng = np.random.default_rng(1)
    for w in rng.normal(size=100) + 1j * rng.normal(size=100):
        assert cayley_inv(cayley(w)) == pytest.approx(w, abs=1e-12)
        assert abs(cayley_inv(reflect_circle(cayley(w))) - theta(w)) <= 1e-12 * max(1, abs(w))


def test_jacobian():
    assert jacobian_J(0) == 2
    w = 0.3 + 0.1j
    assert np.conj(jacobian_J(w)) == pytest.approx(jacobian_J(theta(w)))
    assert jacobian_J(-w) == pytest.approx(jacobian_J(w))
    rng = np.random.default_rng(2)
    for w in 0.5 * (rng.normal(size=10) + 1j * rng.normal(size=10)):
        dc = 2 / (1 - w) ** 2
        assert jacobian_J(w) == pytest.approx(dc / cayley(w), rel=1e-12)
    with pytest.raises(PoleHit):
        jacobian_J(1)


def test_stereographic():
    np.testing.assert_allclose(stereographic(0), [0, 0, -1])
    np.testing.assert_allclose(stereographic(1), [1, 0, 0])
    rng = np.random.default_rng(3)
    for z in 3 * (rng.normal(size=20) + 1j * rng.normal(size=20)):
        p = stereographic(z)
        assert np.linalg.norm(p) == pytest.approx(1)
        if abs(z) > 1:
            assert p[2] > 0


def test_good_direction_single_pair():
    e = good_direction([(0, 0), (1, 0)])
    assert abs(abs(e[0]) - 1) < 1e-9 or direction_margin(e, [(0, 0), (1, 0)]) >= math.pi / 16


@given(st.integers(2, 20), st.integers(0, 10 ** 6))
def test_good_direction_bound(n, seed):
    pts = np.random.default_rng(seed).normal(size=(n, 2))
    e = good_direction(pts)
    c = math.pi / (4 * n * n)
    for j in range(n):
        for k in range(j):
            v = pts[j] - pts[k]
            assert abs(e @ v) >= c * np.linalg.norm(v)


def test_good_direction_stability():
    rng = np.random.default_rng(4)
    n = 6
    pts = rng.normal(size=(n, 2))
    e = good_direction(pts)
    mind = min(np.linalg.norm(pts[j] - pts[k]) for j in range(n) for k in range(j))
    r = math.pi * mind / (32 * n * n)
    for _ in range(50):
        q = pts + rng.uniform(-1, 1, size=pts.shape) * r / math.sqrt(2) * 0.99
        assert direction_margin(e, q) >= math.pi / (8 * n * n)


def test_good_direction_distinct():
    with pytest.raises(PreconditionViolated):
        good_direction([(0, 0), (0, 0)])


def test_radial_shift_example():
    lam, z = radial_shift([(0, 0), (1, 0)], np.array([1.0, 0.0]), 2.0, 0.5)
    assert lam == 16
    assert abs(z[0]) / abs(z[1]) < 1 - 1 / 64
    assert radial_ratio_bound(2.0, 0.5) == 1 - 1 / 64


def _sample_preconditioned(rng, n):
    while True:
        e_ang = rng.uniform(0, 2 * math.pi)
        e = np.array([math.cos(e_ang), math.sin(e_ang)])
        eta = rng.uniform(0.05, 0.9)
        gaps = eta + rng.uniform(1e-9, 0.5, n - 1)
        s = np.concatenate([[rng.uniform(-1, 1)], gaps]).cumsum()
        t = rng.uniform(-1, 1, n)
        perp = np.array([-e[1], e[0]])
        pts = s[:, None] * e + t[:, None] * perp
        R = math.sqrt(float(np.sum(pts ** 2))) * rng.uniform(1.0, 1.5)
        if R > 1:
            return pts, e, R, eta


def test_radial_shift_sampled():
    rng = np.random.default_rng(5)
    for _ in range(100):
        pts, e, R, eta = _sample_preconditioned(rng, int(rng.integers(2, 6)))
        lam, z = radial_shift(pts, e, R, eta)
        bound = radial_ratio_bound(R, eta)
        for a, b in zip(z[:-1], z[1:]):
            assert abs(a) / abs(b) < bound


def test_radial_shift_preconditions():
    e = np.array([1.0, 0.0])
    with pytest.raises(PreconditionViolated):
        radial_shift([(0, 0), (0.2, 0)], e, 2.0, 0.5)
    with pytest.raises(PreconditionViolated):
        radial_shift([(0, 0), (3, 0)], e, 2.0, 0.5)
    with pytest.raises(PreconditionViolated):
        radial_shift([(0, 0), (1, 0)], e, 0.5, 0.5)


def test_bump_support_and_partition():
    assert bump_psi_tilde(-2.0)[0] == 0
    assert bump_psi_tilde(4.5)[0] == 0
    s = 0.5
    total = sum(bump_psi_tilde(s - 3 * l)[0] for l in range(-2, 3))
    assert total == pytest.approx(1, abs=1e-12)
    grid = np.linspace(-4, 4, 17)
    tot = sum(bump_psi_tilde(grid - 3 * l) for l in range(-4, 5))
    np.testing.assert_allclose(tot, 1, atol=1e-12)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_bump_derivative_vs_finite_difference(m):
    s = np.array([-0.6, 0.1, 0.8, 2.3, 3.4])
    h = 1e-3
    fd = (bump_derivative(m - 1, s + h) - bump_derivative(m - 1, s - h)) / (2 * h)
    np.testing.assert_allclose(bump_derivative(m, s), fd, rtol=1e-4, atol=1e-6)


def test_bump_cap():
    with pytest.raises(CapExceeded):
        bump_derivative(9, 0.0)
    with pytest.raises(CapExceeded):
        g_plus_derivative_terms(9)


@pytest.mark.parametrize("l", range(1, 9))
def test_derivative_structure(l):
    terms = g_plus_derivative_terms(l)
    assert len(terms) <= 2 ** (l - 1)
    assert max(j for _, j in terms) == 2 * l
    assert max(abs(c) for c, _ in terms) <= double_factorial(2 * l)


def test_derivative_term_values():
    # d/ds exp(-1/(2(s+1))) = exp(...) / (2 (s+1)^2)
    assert g_plus_derivative_terms(1) == ((0.5, 2),)
    assert sorted(g_plus_derivative_terms(2)) == sorted(((-1.0, 3), (0.25, 4)))


@pytest.mark.parametrize("m", range(1, 7))
def test_bump_bound(m):
    s = np.linspace(-1.5, 4.5, 10_000)
    assert np.max(np.abs(bump_derivative(m, s))) <= bump_bound(m)
