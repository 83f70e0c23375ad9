"""Fixed-step classical Runge-Kutta integration on a uniform grid."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core_types import SparseModel, StateMatrix, TimeGrid
from .errors import BlowUp, NonFinite

BLOWUP = 1e12

VectorField = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Trajectory:
    grid: TimeGrid
    states: StateMatrix

    @property
    def values(self) -> np.ndarray:
        return self.states.values


def _check(v, step, what):
    if not np.all(np.isfinite(v)):
        raise NonFinite(row=step, what=what)
    mag = float(np.max(np.abs(v)))
    if mag > BLOWUP:
        raise BlowUp(step, mag)


def rk4_integrate(field: VectorField, eta, grid: TimeGrid,
                  labels: tuple[str, ...] = ()) -> Trajectory:
    """Integrate an autonomous field from ``eta`` at ``grid.t1`` over ``grid``.

    Raises :class:`BlowUp` as soon as a state or a stage derivative exceeds
    ``1e12`` in magnitude; the reported step is 1-based.
    """
    x = np.array(eta, dtype=float).reshape(-1)
    out = np.empty((grid.n, x.size))
    out[0] = x
    h = grid.h
    for step in range(1, grid.n):
        k1 = np.asarray(field(x), dtype=float)
        _check(k1, step, "derivative")
        k2 = np.asarray(field(x + 0.5 * h * k1), dtype=float)
        _check(k2, step, "derivative")
        k3 = np.asarray(field(x + 0.5 * h * k2), dtype=float)
        _check(k3, step, "derivative")
        k4 = np.asarray(field(x + h * k3), dtype=float)
        _check(k4, step, "derivative")
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        _check(x, step, "state")
        out[step] = x
    return Trajectory(grid, StateMatrix(grid, out, labels))


def simulate_model(model: SparseModel, grid: TimeGrid) -> Trajectory:
    """Trajectory of the identified field ``Theta(x) xi`` started at ``eta``."""
    return rk4_integrate(model.rhs, model.eta, grid)
