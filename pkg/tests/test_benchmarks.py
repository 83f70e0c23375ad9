import numpy as np
import pytest

from isindy.benchmarks import (NoiseSpec, SINE_ICS, add_noise, central_difference, get_system,
                               identify, insindy_identify, isindy_identify, sindy_identify,
                               standard_normals)
from isindy.core_types import ObservationSet, TimeGrid
from isindy.errors import InputError
from isindy.features import polynomial_library
from isindy.odeint import rk4_integrate


def test_zero_noise_is_identity(logistic_truth):
    obs = add_noise(logistic_truth, NoiseSpec(0.0, seed=5))
    assert np.array_equal(obs.values, logistic_truth.values)


def test_noise_level(logistic_truth):
    obs = add_noise(logistic_truth, NoiseSpec(0.3, seed=11))
    assert obs.n == 601
    want = 0.3 * np.std(logistic_truth.values[:, 0])
    assert np.std(obs.values[:, 0] - logistic_truth.values[:, 0]) == pytest.approx(want, rel=0.1)


def test_noise_deterministic_and_column_major(lorenz_truth):
    a = add_noise(lorenz_truth, NoiseSpec(0.1, seed=4))
    b = add_noise(lorenz_truth, NoiseSpec(0.1, seed=4))
    assert np.array_equal(a.values, b.values)
    z = standard_normals(lorenz_truth.n * 3, 4)
    sigma = 0.1 * np.std(lorenz_truth.values, axis=0)
    n = lorenz_truth.n
    assert np.allclose(a.values[:, 1] - lorenz_truth.values[:, 1], z[n:2 * n] * sigma[1],
                       rtol=0, atol=1e-13)
    assert not np.array_equal(add_noise(lorenz_truth, NoiseSpec(0.1, seed=5)).values, a.values)


def test_box_muller_stream():
    u = np.random.Generator(np.random.PCG64(9)).random(4)
    r = np.sqrt(-2 * np.log(1 - u[0]))
    z = standard_normals(3, 9)
    assert z[0] == pytest.approx(r * np.cos(2 * np.pi * u[1]), rel=1e-15)
    assert z[1] == pytest.approx(r * np.sin(2 * np.pi * u[1]), rel=1e-15)
    big = standard_normals(200000, 1)
    assert abs(big.mean()) < 0.01 and abs(big.std() - 1) < 0.01


def test_noise_spec_bounds():
    with pytest.raises(InputError):
        NoiseSpec(-0.1)
    with pytest.raises(InputError):
        get_system("pendulum")


def test_central_difference_order():
    def err(h):
        t = np.arange(0, 1 + h / 2, h)
        return np.max(np.abs(central_difference(np.sin(t), h) - np.cos(t)))
    assert err(0.02) / err(0.01) == pytest.approx(16.0, rel=0.25)
    t = np.linspace(0, 1, 4)
    assert np.allclose(central_difference(t**2, t[1]), 2 * t)


def test_sine_ics():
    assert SINE_ICS == (-1.0, -0.8, -0.6, -0.4, -0.2, 0.2, 0.4, 0.6, 0.8, 1.0)


def test_window_cut_from_zero():
    lorenz = get_system("lorenz")
    full = lorenz.simulate((0.0, 7.0)).values
    win = lorenz.simulate((3.0, 7.0))
    assert win.grid.t1 == pytest.approx(3.0)
    assert np.array_equal(win.values, full[600:])


def test_baseline_examples(logistic, logistic_obs0):
    lib = logistic.library()
    s = sindy_identify(logistic_obs0, lib, 0.1)
    assert s.support == ((0, 1),) and s.eta_assumed
    assert np.allclose(s.xi[:2, 0], [1.6, -1.0], atol=2e-2)
    e = insindy_identify(logistic_obs0, lib, 0.1)
    assert e.support == ((0, 1),) and e.eta_assumed
    assert np.allclose(e.xi[:2, 0], [1.5975, -0.9980], atol=2e-2)
    assert e.eta[0] == logistic_obs0.values[0, 0]


def test_sindy_linear_decay():
    grid = TimeGrid.from_range(0.0, 3.0, 0.01)
    x = rk4_integrate(lambda v: -v, [2.0], grid).values
    m = sindy_identify(ObservationSet(grid, x), polynomial_library(1, 3), 0.1)
    assert m.support == ((0,),) and abs(m.xi[0, 0] + 1) < 1e-3


def test_insindy_exact_on_euler_data():
    grid = TimeGrid.from_range(0.0, 2.0, 0.01)
    # backward-Euler forward model: x_k = x_{k-1} + h * (0.5 x_k - 0.3 x_k^2),
    # generated by fixed-point iteration on each implicit step
    x = np.empty(grid.n)
    x[0] = 0.2
    for k in range(1, grid.n):
        v = x[k - 1]
        for _ in range(200):
            v = x[k - 1] + grid.h * (0.5 * v - 0.3 * v * v)
        x[k] = v
    m = insindy_identify(ObservationSet(grid, x[:, None]), polynomial_library(1, 3), 0.05)
    assert m.support == ((0, 1),)
    assert np.allclose(m.xi[:2, 0], [0.5, -0.3], atol=1e-9)


@pytest.mark.parametrize("name", ["logistic", "lotka_volterra"])
def test_isindy_noise_free(name):
    system = get_system(name)
    lib = system.library()
    model, diag = isindy_identify(add_noise(system.simulate().states, NoiseSpec(0)), lib,
                                  system.lam)
    assert model.support == system.true_model(lib).support
    assert np.max(np.abs(model.xi - system.true_xi(lib))) < 1e-3
    assert np.allclose(model.eta, system.eta, atol=1e-3)
    assert not model.eta_assumed and all(diag.converged)


def test_isindy_sine_degree5():
    sine = get_system("sine")
    lib = sine.library("poly:5")
    model, _ = isindy_identify(add_noise(sine.simulate().states, NoiseSpec(0)), lib, sine.lam)
    assert model.support == ((0, 2, 4),)
    assert np.allclose(model.xi[[0, 2, 4], 0], [-1.0, 0.1666, -0.0083], atol=2e-3)


def test_baselines_degrade_with_noise(logistic, logistic_truth):
    lib = logistic.library()
    true = logistic.true_xi(lib)
    sindy_bad = insindy_x3 = 0
    for seed in range(1, 11):
        obs = add_noise(logistic_truth, NoiseSpec(0.3, seed))
        s = sindy_identify(obs, lib, 0.1)
        if s.support != ((0, 1),) or np.max(np.abs(s.xi - true)) > 0.5:
            sindy_bad += 1
        insindy_x3 += insindy_identify(obs, lib, 0.1).xi[2, 0] != 0
    assert sindy_bad > 5
    assert insindy_x3 > 5


def test_identify_dispatch(logistic, logistic_obs0):
    with pytest.raises(InputError):
        identify("lasso", logistic_obs0, logistic.library(), 0.1)
    assert identify("insindy", logistic_obs0, logistic.library(), 0.1).eta_assumed


def test_true_model_requires_terms():
    with pytest.raises(InputError):
        get_system("sine").true_model(polynomial_library(1, 3))
