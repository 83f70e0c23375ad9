import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.interpolate import BSpline

from isindy.basis import (KnotVector, basis_matrix, default_segments, design_matrix,
                          eval_basis, eval_basis_d2, make_knots, penalty_matrix)
from isindy.core_types import TimeGrid
from isindy.errors import BadRange, OutOfDomain, TooFewSegments


def scipy_basis(knots, t, nu=0):
    """Oracle: scipy's B-spline evaluation of each unit coefficient vector."""
    tau = knots.knots
    out = np.empty((len(t), knots.J))
    for j in range(knots.J):
        c = np.zeros(knots.J)
        c[j] = 1.0
        out[:, j] = BSpline(tau, c, 3, extrapolate=False)(t, nu=nu)
    return np.nan_to_num(out)


def de_boor_scalar(tau, j, p, t):
    """Textbook recursion, one basis function at a time (half-open spans)."""
    if p == 0:
        return 1.0 if tau[j] <= t < tau[j + 1] else 0.0
    a = 0.0 if tau[j + p] == tau[j] else (t - tau[j]) / (tau[j + p] - tau[j])
    b = 0.0 if tau[j + p + 1] == tau[j + 1] else (tau[j + p + 1] - t) / (tau[j + p + 1] - tau[j + 1])
    return a * de_boor_scalar(tau, j, p - 1, t) + b * de_boor_scalar(tau, j + 1, p - 1, t)


def test_uniform_knot_examples():
    k = make_knots(0.0, 1.0, 10)
    assert np.allclose(k.breakpoints, np.linspace(0, 1, 11))
    assert k.J == 13
    assert make_knots(0.0, 6.0, 2).J == 5


def test_knot_errors():
    with pytest.raises(BadRange):
        make_knots(1.0, 0.0, 10)
    with pytest.raises(TooFewSegments):
        make_knots(0.0, 1.0, 1)


def test_default_segments_bounds():
    assert default_segments(30) == 10
    assert default_segments(601) == 75
    assert default_segments(100000) == 200


def test_matches_scalar_recursion_at_005():
    k = make_knots(0.0, 1.0, 10)
    ours = eval_basis(k, 0.05)
    oracle = [de_boor_scalar(k.knots, j, 3, 0.05) for j in range(k.J)]
    assert np.allclose(ours, oracle, atol=1e-15)


def test_matches_scipy(rng):
    k = make_knots(-1.0, 2.5, 17)
    t = np.concatenate([rng.uniform(-1, 2.5, 200), k.breakpoints[:-1]])
    assert np.allclose(basis_matrix(k, t), scipy_basis(k, t), atol=1e-14)
    assert np.allclose(basis_matrix(k, t, 2), scipy_basis(k, t, 2), rtol=1e-10, atol=1e-8)


def test_endpoints():
    k = make_knots(0.0, 1.0, 10)
    first = eval_basis(k, 0.0)
    assert first[0] == 1.0 and np.all(first[1:] == 0)
    last = eval_basis(k, 1.0)
    assert last[-1] == 1.0 and np.all(last[:-1] == 0)
    assert np.array_equal(basis_matrix(k, [0.0])[0], np.eye(k.J)[0])


def test_partition_of_unity_random(rng):
    k = make_knots(0.0, 6.0, 37)
    t = rng.uniform(0, 6, 1000)
    assert np.max(np.abs(basis_matrix(k, t).sum(axis=1) - 1)) < 1e-12


@given(st.floats(0.0, 1.0))
def test_partition_of_unity_property(t):
    k = make_knots(0.0, 1.0, 10)
    assert abs(eval_basis(k, t).sum() - 1.0) < 1e-12


def test_local_support(rng):
    k = make_knots(0.0, 1.0, 10)
    tau = k.knots
    t = rng.uniform(0, 1, 500)
    b = basis_matrix(k, t)
    for j in range(k.J):
        outside = (t < tau[j]) | (t > tau[j + 4])
        assert np.all(b[outside, j] == 0)
    nz = b != 0
    for row in nz:
        idx = np.flatnonzero(row)
        assert idx.size <= 4 and np.all(np.diff(idx) == 1)


def test_out_of_domain():
    k = make_knots(0.0, 1.0, 10)
    with pytest.raises(OutOfDomain):
        eval_basis(k, 1.1)
    with pytest.raises(OutOfDomain):
        eval_basis_d2(k, -0.5)


def test_d2_of_linear_is_zero(rng):
    k = make_knots(0.0, 2.0, 8)
    # Greville abscissae give the coefficients of the identity function
    tau = k.knots
    grev = np.array([tau[j + 1:j + 4].mean() for j in range(k.J)])
    b = 3.0 + 2.0 * grev
    t = rng.uniform(0, 2, 200)
    assert np.allclose(basis_matrix(k, t) @ b, 3.0 + 2.0 * t, atol=1e-12)
    assert np.max(np.abs(basis_matrix(k, t, 2) @ b)) < 1e-9


def test_d2_vs_central_difference(rng):
    k = make_knots(0.0, 1.0, 10)
    delta = 1e-4
    for t in rng.uniform(0.01, 0.99, 40):
        if np.min(np.abs(k.breakpoints - t)) < 3 * delta:
            continue
        fd = (eval_basis(k, t + delta) - 2 * eval_basis(k, t) + eval_basis(k, t - delta)) / delta**2
        exact = eval_basis_d2(k, t)
        scale = np.max(np.abs(exact))
        assert np.max(np.abs(fd - exact)) <= 1e-4 * scale


def test_design_matrix_rows():
    k = make_knots(0.0, 1.0, 10)
    r = design_matrix(k, TimeGrid.from_range(0.0, 1.0, 0.1))
    assert r.shape == (11, 13)
    assert np.max(np.abs(r.sum(axis=1) - 1)) < 1e-12


def test_penalty_symmetric_psd_and_linear_null():
    k = make_knots(0.0, 6.0, 20)
    q = penalty_matrix(k)
    assert np.max(np.abs(q - q.T)) < 1e-12
    ev = np.linalg.eigvalsh(q)
    assert ev.min() > -1e-10 * np.abs(ev).max()
    tau = k.knots
    grev = np.array([tau[j + 1:j + 4].mean() for j in range(k.J)])
    for b in (np.ones(k.J), grev, 0.3 - 1.7 * grev):
        assert abs(b @ q @ b) < 1e-10


def test_penalty_vs_fine_trapezoid():
    k = make_knots(0.0, 1.0, 10)
    t = np.linspace(0.0, 1.0, 10000)
    d2 = scipy_basis(k, t, 2)
    w = np.full(t.size, t[1] - t[0])
    w[[0, -1]] /= 2
    oracle = (d2 * w[:, None]).T @ d2
    assert np.max(np.abs(penalty_matrix(k) - oracle)) < 1e-8 * np.max(np.abs(oracle)) * 1e3


def test_penalty_exact_on_small_case():
    # J = 5: products of piecewise-linear second derivatives are quadratic per
    # span, so 2-point Gauss-Legendre per span is exact
    k = make_knots(0.0, 6.0, 2)
    x, w = np.polynomial.legendre.leggauss(2)
    q = np.zeros((5, 5))
    for a, b in zip(k.breakpoints[:-1], k.breakpoints[1:]):
        t = 0.5 * (b - a) * x + 0.5 * (a + b)
        d2 = scipy_basis(k, t, 2)
        q += 0.5 * (b - a) * (d2 * w[:, None]).T @ d2
    assert np.allclose(penalty_matrix(k), q, rtol=1e-12, atol=1e-14)
