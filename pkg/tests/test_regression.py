import numpy as np
import pytest

from isindy.core_types import StateMatrix, TimeGrid
from isindy.errors import DimensionMismatch, InputError
from isindy.regression import assemble_regression, cumulative_rectangle, cumulative_trapezoid


def dense_c(n, h):
    """The (n-1) x n lower-triangular trapezoid operator, built explicitly."""
    c = np.zeros((n - 1, n))
    for k in range(n - 1):
        c[k, 0] = h / 2
        c[k, 1:k + 1] = h
        c[k, k + 1] = h / 2
    return c


def test_examples():
    assert np.allclose(cumulative_trapezoid(np.ones(5), 0.5), [0.5, 1.0, 1.5, 2.0])
    t = np.linspace(0, 1, 5)
    assert np.allclose(cumulative_trapezoid(t, 0.25), [0.03125, 0.125, 0.28125, 0.5],
                       atol=1e-15)


@pytest.mark.parametrize("n", [2, 3, 100, 500])
def test_matches_dense_operator(rng, n):
    v = rng.normal(size=(n, 3))
    h = 0.013
    assert np.max(np.abs(cumulative_trapezoid(v, h) - dense_c(n, h) @ v)) < 1e-12


def test_second_order_error():
    def err(n):
        t = np.linspace(0, 1, n)
        return abs(cumulative_trapezoid(np.exp(t), t[1] - t[0])[-1] - (np.e - 1))
    assert err(51) / err(101) == pytest.approx(4.0, rel=0.1)


def test_rectangle_rules():
    v = np.array([1.0, 2.0, 3.0])
    assert np.array_equal(cumulative_rectangle(v, 0.5, "left"), [0.5, 1.5])
    assert np.array_equal(cumulative_rectangle(v, 0.5, "right"), [1.0, 2.5])
    with pytest.raises(InputError):
        cumulative_rectangle(v, 0.5, "middle")


def test_input_errors():
    with pytest.raises(InputError):
        cumulative_trapezoid(np.ones(1), 0.1)
    with pytest.raises(InputError):
        cumulative_trapezoid(np.ones(3), 0.0)


def test_constant_feature_design():
    g = TimeGrid.from_range(0.0, 1.0, 0.1)
    design, target = assemble_regression(np.ones((g.n, 1)),
                                         StateMatrix(g, np.arange(g.n)[:, None] * 1.0), 0)
    assert np.allclose(design[:, 0], 0.1 * np.arange(1, g.n))
    assert np.array_equal(target, np.arange(1, g.n))


def test_forward_model_is_exact(rng):
    g = TimeGrid.from_range(0.0, 2.0, 0.01)
    theta = rng.normal(size=(g.n, 4))
    xi = np.array([0.5, 0.0, -1.2, 0.0])
    eta = 0.7
    x = np.concatenate([[eta], eta + cumulative_trapezoid(theta @ xi, g.h)])
    design, target = assemble_regression(theta, StateMatrix(g, x[:, None]), 0)
    assert np.linalg.norm(target - design @ xi - eta) < 1e-10


def test_two_samples_give_one_row():
    design, target = assemble_regression(np.array([[1.0], [3.0]]), np.array([0.0, 5.0]), 0,
                                         h=0.5)
    assert design.shape == (1, 1) and design[0, 0] == 1.0
    assert target.shape == (1,)


def test_linear_in_theta_and_states(rng):
    g = TimeGrid.from_range(0.0, 1.0, 0.05)
    a, b = rng.normal(size=(2, g.n, 3))
    x = rng.normal(size=(g.n, 2))
    da, _ = assemble_regression(a, StateMatrix(g, x), 1)
    db, _ = assemble_regression(b, StateMatrix(g, x), 1)
    dab, _ = assemble_regression(2 * a - b, StateMatrix(g, x), 1)
    assert np.allclose(dab, 2 * da - db, atol=1e-14)


def test_shape_checks():
    g = TimeGrid.from_range(0.0, 1.0, 0.1)
    s = StateMatrix(g, np.zeros((g.n, 2)))
    with pytest.raises(DimensionMismatch):
        assemble_regression(np.ones((g.n - 1, 2)), s, 0)
    with pytest.raises(DimensionMismatch):
        assemble_regression(np.ones((g.n, 2)), s, 2)
    with pytest.raises(InputError):
        assemble_regression(np.ones((g.n, 2)), np.zeros(g.n), 0)
