"""Penalized cubic-spline smoothing with GCV-tuned weight.

Each column is fitted by minimizing

    (1 - rho) * ||y - R b||^2 + rho * b' Q b

whose minimizer is ``b = [(1-rho) R'R + rho Q]^{-1} (1-rho) R'y`` with hat
matrix ``S = (1-rho) R [(1-rho) R'R + rho Q]^{-1} R'``.  The weight ``rho``
is chosen on a logit-spaced grid by generalized cross-validation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .basis import KnotVector, default_segments, design_matrix, make_knots, penalty_matrix
from .core_types import ObservationSet, StateMatrix, validate_observations
from .errors import IdentificationError, InputError, SingularSystem

log = logging.getLogger(__name__)

LOGIT_RANGE = (-30.0, 12.0)
NORMAL_EQ_RTOL = 1e-8


@dataclass(frozen=True)
class SplineModel:
    knots: KnotVector
    b: np.ndarray
    rho: float
    gcv: float

    def __post_init__(self):
        if not 0.0 <= self.rho < 1.0:
            raise InputError(f"rho must lie in [0, 1), got {self.rho!r}")
        b = np.array(self.b, dtype=float)
        if not np.all(np.isfinite(b)):
            raise SingularSystem(self.rho, "non-finite coefficients")
        b.flags.writeable = False
        object.__setattr__(self, "b", b)

    def roughness(self, q: np.ndarray) -> float:
        """Integrated squared second derivative ``b' Q b``."""
        return float(self.b @ q @ self.b)


def _factor(r, q, rho):
    if not 0.0 <= rho < 1.0:
        raise InputError(f"rho must lie in [0, 1), got {rho!r}")
    a = (1.0 - rho) * (r.T @ r) + rho * q
    try:
        return a, cho_factor(a, lower=True, check_finite=True)
    except LinAlgError as exc:
        raise SingularSystem(rho, str(exc)) from None


def fit_coefficients(r: np.ndarray, q: np.ndarray, y: np.ndarray, rho: float) -> np.ndarray:
    """Solve ``[(1-rho) R'R + rho Q] b = (1-rho) R'y`` by Cholesky factorization.

    Raises :class:`SingularSystem` when the factorization fails or the
    residual exceeds ``1e-8 (||rhs|| + ||A|| ||b||)``.
    """
    a, fac = _factor(r, q, rho)
    rhs = (1.0 - rho) * (r.T @ y)
    b = cho_solve(fac, rhs)
    resid = np.linalg.norm(a @ b - rhs)
    # normwise backward error: near rho = 1 the system is ill-conditioned and
    # even a correctly rounded b leaves a residual of order eps ||A|| ||b||
    scale = np.linalg.norm(rhs) + np.linalg.norm(a, 2) * np.linalg.norm(b)
    if not np.isfinite(resid) or resid > NORMAL_EQ_RTOL * scale:
        raise SingularSystem(rho, f"normal-equation residual {resid:.3e}")
    return b


def _gcv_from_factor(r, y, fac, rho):
    n = r.shape[0]
    w = 1.0 - rho
    b = cho_solve(fac, w * (r.T @ y))
    fitted = r @ b
    # diag(S) = (1-rho) <R_k, A^{-1} R_k> row by row, from one multi-RHS solve
    diag_s = w * np.einsum("ij,ji->i", r, cho_solve(fac, r.T))
    trace_resid = n - diag_s.sum()
    rss = float(np.sum((y - fitted) ** 2))
    return b, (rss / n) / (trace_resid / n) ** 2


def gcv_score(r: np.ndarray, q: np.ndarray, y: np.ndarray, rho: float) -> float:
    """``(1/n)||(I - S)y||^2 / [(1/n) tr(I - S)]^2`` without forming ``S``."""
    _, fac = _factor(r, q, rho)
    return _gcv_from_factor(r, y, fac, rho)[1]


def rho_grid(grid_size: int = 51, logit_range: tuple[float, float] = LOGIT_RANGE
             ) -> np.ndarray:
    if grid_size < 3:
        raise InputError("grid_size must be at least 3")
    u = np.linspace(logit_range[0], logit_range[1], grid_size)
    return 1.0 / (1.0 + np.exp(-u))


def select_rho(r: np.ndarray, q: np.ndarray, y: np.ndarray, grid_size: int = 51,
               knots: KnotVector | None = None,
               logit_range: tuple[float, float] = LOGIT_RANGE) -> tuple[float, SplineModel]:
    """Grid search over logit-spaced ``rho``; ties go to the larger ``rho``."""
    best = None
    failures = []
    for rho in rho_grid(grid_size, logit_range):
        try:
            _, fac = _factor(r, q, rho)
            b, score = _gcv_from_factor(r, y, fac, rho)
        except SingularSystem as exc:
            failures.append(exc)
            continue
        if not np.isfinite(score):
            continue
        if best is None or score <= best[2]:
            best = (rho, b, score)
    if best is None:
        if failures:
            raise failures[-1]
        raise SingularSystem(float("nan"), "GCV undefined at every grid point")
    rho, b, score = best
    return float(rho), SplineModel(knots, b, float(rho), float(score))


def smooth_dataset(obs: ObservationSet, num_segments: int | None = None,
                   grid_size: int = 51, logit_range: tuple[float, float] = LOGIT_RANGE
                   ) -> tuple[StateMatrix, list[SplineModel]]:
    """Smooth every column independently on the observation grid."""
    validate_observations(obs)
    if num_segments is None:
        num_segments = default_segments(obs.n)
    knots = make_knots(obs.grid.t1, obs.grid.tn, num_segments)
    r = design_matrix(knots, obs.grid)
    q = penalty_matrix(knots)
    models = []
    smoothed = np.empty_like(obs.values)
    for i in range(obs.d):
        try:
            rho, model = select_rho(r, q, obs.values[:, i], grid_size, knots, logit_range)
        except IdentificationError as exc:
            exc.args = (f"column {i + 1} ({obs.labels[i]}): {exc}",)
            raise
        log.debug("column %d: rho=%.3g gcv=%.3g", i + 1, rho, model.gcv)
        smoothed[:, i] = r @ model.b
        models.append(model)
    return StateMatrix(obs.grid, smoothed, obs.labels), models
