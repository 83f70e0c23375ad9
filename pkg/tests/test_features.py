import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from isindy.core_types import StateMatrix, TimeGrid
from isindy.errors import DimensionMismatch, InputError, NonFinite
from isindy.features import (combine, evaluate, parse_feature, parse_library_spec,
                             polynomial_library, trig_library)

LORENZ_ORDER = [
    "x1", "x2", "x3",
    "x1^2", "x1x2", "x1x3", "x2^2", "x2x3", "x3^2",
    "x1^3", "x1^2x2", "x1^2x3", "x1x2^2", "x1x2x3", "x1x3^2",
    "x2^3", "x2^2x3", "x2x3^2", "x3^3",
]


def test_three_variable_cubic_order():
    lib = polynomial_library(3, 3)
    assert len(lib) == 19
    assert lib.names == LORENZ_ORDER


@given(st.integers(1, 4), st.integers(1, 4))
def test_polynomial_count(d, p):
    assert len(polynomial_library(d, p)) == math.comb(d + p, p) - 1


def test_small_libraries():
    assert polynomial_library(1, 3).names == ["x1", "x1^2", "x1^3"]
    assert polynomial_library(2, 2).names == ["x1", "x2", "x1^2", "x1x2", "x2^2"]
    assert trig_library(1, 2).names == ["sin(x1)", "cos(x1)", "sin(2x1)", "cos(2x1)"]
    assert len(trig_library(3, 1)) == 6
    assert trig_library(1, 1).names == ["sin(x1)", "cos(x1)"]
    with pytest.raises(InputError):
        polynomial_library(0, 2)


def test_combine():
    c = combine(polynomial_library(1, 3), trig_library(1, 2))
    assert c.names == ["x1", "x1^2", "x1^3", "sin(x1)", "cos(x1)", "sin(2x1)", "cos(2x1)"]
    lib = polynomial_library(2, 3)
    assert combine(lib, lib) == lib
    with pytest.raises(DimensionMismatch):
        combine(polynomial_library(1, 2), polynomial_library(2, 2))


def test_library_spec_grammar():
    assert parse_library_spec("poly:3+trig:2", 1).names == combine(
        polynomial_library(1, 3), trig_library(1, 2)).names
    for bad in ("poly", "cheb:3", "poly:x", ""):
        with pytest.raises(InputError):
            parse_library_spec(bad, 1)


def test_construction_deterministic():
    assert polynomial_library(3, 3).descriptors == polynomial_library(3, 3).descriptors


@given(st.integers(1, 11), st.integers(1, 3), st.integers(1, 3))
def test_name_round_trip(d, p, k):
    for f in combine(polynomial_library(d, p), trig_library(d, k)):
        assert parse_feature(f.name(d), d) == f


def test_wide_names_use_separator():
    lib = polynomial_library(10, 2)
    assert "x1*x10" in lib.names


def test_arithmetic_examples():
    lib = polynomial_library(3, 3)
    row = np.array([[2.0, 3.0, 4.0]])
    assert evaluate(lib, row)[0, lib.names.index("x1x2x3")] == 24.0
    trig = trig_library(1, 2)
    assert evaluate(trig, np.array([[np.pi / 4]]))[0, 2] == pytest.approx(1.0, abs=1e-15)


def test_matches_naive_loop(rng):
    lib = polynomial_library(3, 3)
    x = rng.normal(size=(5, 3))
    theta = evaluate(lib, x)
    for r in range(5):
        for c, f in enumerate(lib):
            want = 1.0
            for i, e in enumerate(f.exponents):
                want *= x[r, i] ** e
            assert abs(theta[r, c] - want) <= 1e-14 * max(1.0, abs(want))


def test_rows_independent(rng):
    lib = combine(polynomial_library(2, 3), trig_library(2, 2))
    x = rng.normal(size=(2, 2))
    stacked = np.vstack([evaluate(lib, x[:1]), evaluate(lib, x[1:])])
    assert np.array_equal(evaluate(lib, x), stacked)


def test_evaluate_errors():
    lib = polynomial_library(2, 2)
    with pytest.raises(DimensionMismatch):
        evaluate(lib, np.zeros((4, 3)))
    g = TimeGrid.from_range(0.0, 1.0, 0.5)
    big = StateMatrix(g, np.full((3, 1), 1e200))
    with pytest.raises(NonFinite) as err:
        evaluate(polynomial_library(1, 2), big)
    assert "x1^2" in str(err.value)
