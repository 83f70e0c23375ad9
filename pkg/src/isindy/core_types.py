"""Shared domain types: time grids, observation/state matrices, sparse models.

Every array stored on these types is made read-only at construction so
instances can be shared freely between threads and processes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .errors import InputError, NonFinite, NonUniformGrid, TooShort

if TYPE_CHECKING:
    from .features import FeatureLibrary

GRID_RTOL = 1e-9


def _frozen(a, ndim=None) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if ndim == 2 and arr.ndim == 1:
        arr = arr[:, None]
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class TimeGrid:
    """Uniform sampling grid ``t1, t1 + h, ..., t1 + (n-1) h``."""

    t1: float
    h: float
    n: int

    def __post_init__(self):
        if not (self.h > 0 and np.isfinite(self.h)):
            raise InputError(f"time step must be positive, got {self.h!r}")
        if self.n < 3:
            raise TooShort(self.n)

    def time(self, k: int) -> float:
        """Time of the 1-based sample ``k``."""
        return self.t1 + (k - 1) * self.h

    @property
    def times(self) -> np.ndarray:
        return self.t1 + np.arange(self.n) * self.h

    @property
    def tn(self) -> float:
        return self.time(self.n)

    @classmethod
    def from_range(cls, t1: float, tn: float, h: float) -> "TimeGrid":
        n = int(round((tn - t1) / h)) + 1
        return cls(float(t1), float(h), n)

    @classmethod
    def from_times(cls, times: Sequence[float]) -> "TimeGrid":
        """Recover the grid behind sampled times, rejecting irregular spacing."""
        t = np.asarray(times, dtype=float)
        if t.size < 3:
            raise TooShort(t.size)
        if not np.all(np.isfinite(t)):
            bad = int(np.flatnonzero(~np.isfinite(t))[0])
            raise NonFinite(bad, 0, what="time")
        h = (t[-1] - t[0]) / (t.size - 1)
        deltas = np.diff(t)
        off = np.abs(deltas - h) > GRID_RTOL * abs(h)
        if h <= 0 or off.any():
            k = int(np.flatnonzero(off)[0]) + 1 if off.any() else 1
            raise NonUniformGrid(k, float(deltas[k - 1]), float(h))
        return cls(float(t[0]), float(h), int(t.size))


@dataclass(frozen=True)
class ObservationSet:
    """Noisy measurements ``y(t_k)`` of ``d`` variables on a uniform grid."""

    grid: TimeGrid
    values: np.ndarray
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, ndim=2))
        if not self.labels:
            labels = tuple(f"x{i + 1}" for i in range(self.values.shape[1]))
            object.__setattr__(self, "labels", labels)
        else:
            object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class StateMatrix:
    """Smoothed or simulated states on a uniform grid (one column per variable)."""

    grid: TimeGrid
    values: np.ndarray
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, ndim=2))
        if not self.labels:
            labels = tuple(f"x{i + 1}" for i in range(self.values.shape[1]))
            object.__setattr__(self, "labels", labels)
        else:
            object.__setattr__(self, "labels", tuple(self.labels))
        if self.values.shape[0] != self.grid.n:
            raise InputError(
                f"state matrix has {self.values.shape[0]} rows, grid has {self.grid.n}"
            )

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class SparseModel:
    """An identified ODE system ``dx/dt = Theta(x) xi`` with ``x(t1) = eta``.

    ``eta_assumed`` marks models whose initial condition was pinned to the
    first observation rather than estimated.
    """

    library: "FeatureLibrary"
    xi: np.ndarray
    eta: np.ndarray
    eta_assumed: bool = False
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        xi = _frozen(self.xi, ndim=2)
        eta = _frozen(np.atleast_1d(self.eta))
        if xi.shape != (len(self.library), self.library.d):
            raise InputError(
                f"xi has shape {xi.shape}, expected "
                f"({len(self.library)}, {self.library.d})"
            )
        if eta.shape != (self.library.d,):
            raise InputError(f"eta has shape {eta.shape}, expected ({self.library.d},)")
        if not np.all(np.isfinite(eta)):
            raise NonFinite(what="initial condition")
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "eta", eta)
        support = tuple(
            tuple(int(k) for k in np.flatnonzero(xi[:, i] != 0.0))
            for i in range(xi.shape[1])
        )
        object.__setattr__(self, "_support", support)

    @property
    def d(self) -> int:
        return self.library.d

    @property
    def support(self) -> tuple[tuple[int, ...], ...]:
        return self._support

    def rhs(self, x: np.ndarray) -> np.ndarray:
        """Vector field at a single state; terms are summed in library order."""
        feats = self.library.evaluate_point(x)
        out = np.zeros(self.d)
        for i, active in enumerate(self._support):
            acc = 0.0
            for k in active:
                acc = acc + self.xi[k, i] * feats[k]
            out[i] = acc
        return out


def validate_observations(obs: ObservationSet) -> ObservationSet:
    """Check shape and finiteness; return ``obs`` unchanged when valid."""
    values = obs.values
    if values.ndim != 2 or values.shape[1] < 1:
        raise InputError("observations need at least one column")
    if values.shape[0] < 3:
        raise TooShort(values.shape[0])
    if values.shape[0] != obs.grid.n:
        raise InputError(
            f"observation matrix has {values.shape[0]} rows, grid has {obs.grid.n}"
        )
    bad = ~np.isfinite(values)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise NonFinite(int(r), int(c))
    if len(obs.labels) != values.shape[1]:
        raise InputError("label count does not match column count")
    return obs


def read_csv(path: str | Path) -> ObservationSet:
    """Read ``t,<name1>,...`` CSV into a validated :class:`ObservationSet`."""
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    if not rows:
        raise TooShort(0)
    header = [h.strip() for h in rows[0]]
    if len(header) < 2 or header[0] != "t":
        raise InputError(f"{path}: header must start with 't' and name >= 1 column")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None
    if data.shape[0] < 3:
        raise TooShort(data.shape[0])
    if data.shape[1] != len(header):
        raise InputError(f"{path}: ragged rows")
    grid = TimeGrid.from_times(data[:, 0])
    obs = ObservationSet(grid, data[:, 1:], tuple(header[1:]))
    return validate_observations(obs)


def write_csv(path: str | Path, grid: TimeGrid, values: np.ndarray,
              labels: Sequence[str]) -> Path:
    path = Path(path)
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", *labels])
        for t, row in zip(grid.times, values):
            w.writerow([f"{t:.17g}", *(f"{v:.17g}" for v in row)])
    return path
