"""Integral-form discretization of ``x(t) = int Theta(x) ds xi + eta``."""

from __future__ import annotations

import numpy as np

from .core_types import StateMatrix
from .errors import DimensionMismatch, InputError


def cumulative_trapezoid(v: np.ndarray, h: float) -> np.ndarray:
    """Running trapezoid integrals from ``t1`` to ``t2, ..., tn``.

    Works along axis 0, so a matrix input integrates each column.
    """
    v = np.asarray(v, dtype=float)
    if v.shape[0] < 2:
        raise InputError("need at least two samples to integrate")
    if not h > 0:
        raise InputError(f"step must be positive, got {h!r}")
    return (h / 2.0) * np.cumsum(v[:-1] + v[1:], axis=0)


def cumulative_rectangle(v: np.ndarray, h: float, rule: str = "right") -> np.ndarray:
    """Euler-type running sums ``h * sum v_j``.

    ``rule="left"`` sums ``v_1..v_k`` for the integral to ``t_{k+1}``;
    ``rule="right"`` sums ``v_2..v_{k+1}``.
    """
    v = np.asarray(v, dtype=float)
    if v.shape[0] < 2:
        raise InputError("need at least two samples to integrate")
    if rule == "left":
        return h * np.cumsum(v[:-1], axis=0)
    if rule == "right":
        return h * np.cumsum(v[1:], axis=0)
    raise InputError(f"unknown rectangle rule {rule!r}")


def assemble_regression(theta: np.ndarray, states: StateMatrix | np.ndarray,
                        column: int, h: float | None = None
                        ) -> tuple[np.ndarray, np.ndarray]:
    """Design ``C Theta`` and target ``S x_i`` for state column ``column`` (0-based).

    ``states`` may be a bare ``(n, d)`` array when the step ``h`` is given.
    """
    theta = np.asarray(theta, dtype=float)
    if isinstance(states, StateMatrix):
        values, h = states.values, states.grid.h
    else:
        values = np.asarray(states, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if h is None:
            raise InputError("step h is required when states is an array")
    if theta.ndim != 2 or theta.shape[0] != values.shape[0]:
        raise DimensionMismatch(
            f"theta has shape {theta.shape}, states have {values.shape[0]} rows"
        )
    if not 0 <= column < values.shape[1]:
        raise DimensionMismatch(f"column {column} out of range for d={values.shape[1]}")
    design = cumulative_trapezoid(theta, h)
    target = np.array(values[1:, column])
    return design, target
