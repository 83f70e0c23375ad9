"""Separated least-squares estimates and sequential threshold least squares.

The integrated regression for state ``i`` is

    x_i(t_k) ~ [C Theta](k, :) xi_i + eta_i,   k = 2..n

with the initial condition ``eta_i`` as an intercept. The closed forms that
separate ``xi_i`` from ``eta_i`` through the block inverse are equivalent to
a least-squares solve of the augmented system ``[C Theta | 1]``; that solve is
done here by Householder QR on column-normalized data.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import qr, solve_triangular

from .core_types import SparseModel, StateMatrix
from .errors import (DimensionMismatch, EmptySupport, InputError, NoConvergence,
                     RankDeficient, Underdetermined)
from .regression import assemble_regression

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class StlsConfig:
    lam: float | Sequence[float] = 0.1
    max_iterations: int = 20
    rank_tolerance: float = 1e-10
    strict: bool = False

    def __post_init__(self):
        if np.any(np.asarray(self.lam, dtype=float) < 0):
            raise InputError("thresholds must be non-negative")
        if self.max_iterations < 1:
            raise InputError("max_iterations must be >= 1")

    def lambdas(self, d: int) -> np.ndarray:
        lam = np.asarray(self.lam, dtype=float)
        if lam.ndim == 0:
            return np.full(d, float(lam))
        if lam.shape != (d,):
            raise DimensionMismatch(f"need 1 or {d} thresholds, got {lam.size}")
        return lam


@dataclass
class FitDiagnostics:
    """Per-column record of an STLS run.

    ``varrho[i]`` lists the intercept Schur complement
    ``1'(I - P)1`` after each fit of column ``i``.
    """

    iterations: list[int] = field(default_factory=list)
    residual_norm: list[float] = field(default_factory=list)
    varrho: list[list[float]] = field(default_factory=list)
    converged: list[bool] = field(default_factory=list)


def _lstsq_qr(a: np.ndarray, b: np.ndarray, rank_tolerance: float):
    """Least squares on column-normalized ``a``; returns (coef, R, scale)."""
    scale = np.linalg.norm(a, axis=0)
    if np.any(scale == 0) or not np.all(np.isfinite(scale)):
        raise RankDeficient(np.inf, "design contains an all-zero or non-finite column")
    q, r = qr(a / scale, mode="economic", check_finite=False)
    # rank test on the R diagonal of unit-norm columns, as in LINPACK dqrdc
    diag = np.abs(np.diag(r))
    if diag.min() <= rank_tolerance * diag.max():
        sv = np.linalg.svd(r, compute_uv=False)
        cond = sv[0] / sv[-1] if sv[-1] > 0 else np.inf
        raise RankDeficient(cond, f"R diagonal ratio {diag.min() / diag.max():.3e}")
    z = solve_triangular(r, q.T @ b, check_finite=False)
    return z / scale, r, scale


def ls_separated(design: np.ndarray, target: np.ndarray,
                 rank_tolerance: float = 1e-10) -> tuple[np.ndarray, float, float]:
    """Jointly estimate ``(xi, eta)`` for ``target ~ design @ xi + eta``.

    Returns ``(xi, eta, varrho)`` where ``varrho = 1'(I - D(D'D)^{-1}D')1``.
    """
    design = np.asarray(design, dtype=float)
    target = np.asarray(target, dtype=float)
    if design.ndim == 1:
        design = design[:, None]
    rows, k = design.shape
    if k < 1:
        raise InputError("design needs at least one column")
    if target.shape != (rows,):
        raise DimensionMismatch(f"target has shape {target.shape}, expected ({rows},)")
    if rows <= k:
        raise Underdetermined(f"{rows} equations for {k} coefficients plus intercept")
    aug = np.column_stack([design, np.ones(rows)])
    coef, r, scale = _lstsq_qr(aug, target, rank_tolerance)
    # the last R diagonal is the norm of 1 orthogonal to span(design), normalized
    varrho = float((r[-1, -1] * scale[-1]) ** 2)
    return coef[:-1], float(coef[-1]), varrho


def ls_plain(design: np.ndarray, target: np.ndarray,
             rank_tolerance: float = 1e-10) -> np.ndarray:
    """Least squares without an intercept (derivative and pinned-IC regressions)."""
    design = np.asarray(design, dtype=float)
    rows, k = design.shape
    if rows < k:
        raise Underdetermined(f"{rows} equations for {k} coefficients")
    return _lstsq_qr(design, target, rank_tolerance)[0]


def sequential_threshold(design: np.ndarray, target: np.ndarray, lam: float, *,
                         intercept: bool = True, max_iterations: int = 20,
                         rank_tolerance: float = 1e-10, column: int = 0,
                         strict: bool = False):
    """Threshold-and-refit until the active set repeats.

    Returns ``(xi, eta, info)``; ``eta`` is ``0.0`` when ``intercept`` is false.
    Coefficients at or below ``lam`` in magnitude are removed.
    """
    m = design.shape[1]
    varrhos = []

    def fit(active):
        xi = np.zeros(m)
        if intercept:
            sub, eta, vr = ls_separated(design[:, active], target, rank_tolerance)
            varrhos.append(vr)
        else:
            sub, eta = ls_plain(design[:, active], target, rank_tolerance), 0.0
        xi[active] = sub
        return xi, eta

    active = np.ones(m, dtype=bool)
    xi, eta = fit(active)
    converged = False
    it = 0
    for it in range(1, max_iterations + 1):
        keep = np.abs(xi) > lam
        if not keep.any():
            raise EmptySupport(column + 1, it)
        xi, eta = fit(keep)
        if np.array_equal(keep, active):
            converged = True
            break
        active = keep
    if not converged:
        if strict:
            raise NoConvergence(column + 1, it)
        log.warning("column %d: support not stable after %d iterations", column + 1, it)
    resid = target - design @ xi - eta
    info = {"iterations": it, "converged": converged,
            "residual_norm": float(np.linalg.norm(resid)), "varrho": varrhos}
    return xi, eta, info


def stls_identify(theta: np.ndarray, states: StateMatrix, config: StlsConfig,
                  library) -> tuple[SparseModel, FitDiagnostics]:
    """Sparse integral-form identification of every state column."""
    theta = np.asarray(theta, dtype=float)
    d = states.d
    if theta.shape[1] != len(library):
        raise DimensionMismatch(f"theta has {theta.shape[1]} columns, library {len(library)}")
    if theta.shape[1] >= states.n - 1:
        raise Underdetermined(f"{theta.shape[1]} features for {states.n - 1} equations")
    lams = config.lambdas(d)
    xi = np.zeros((theta.shape[1], d))
    eta = np.zeros(d)
    diag = FitDiagnostics()
    for i in range(d):
        design, target = assemble_regression(theta, states, i)
        xi[:, i], eta[i], info = sequential_threshold(
            design, target, lams[i], intercept=True,
            max_iterations=config.max_iterations,
            rank_tolerance=config.rank_tolerance, column=i, strict=config.strict)
        diag.iterations.append(info["iterations"])
        diag.residual_norm.append(info["residual_norm"])
        diag.varrho.append(info["varrho"])
        diag.converged.append(info["converged"])
    model = SparseModel(library, xi, eta, eta_assumed=False,
                        meta={"lambda": lams.tolist()})
    return model, diag
