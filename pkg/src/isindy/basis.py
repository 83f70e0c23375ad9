"""Clamped cubic B-spline basis on equal-width spans.

Basis values come from the Cox-de Boor recursion evaluated over the full
knot vector; second derivatives are the analytic derivatives of the same
recursion, so both are exact for each cubic piece.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core_types import TimeGrid
from .errors import BadRange, OutOfDomain, TooFewSegments

DEGREE = 3
SIMPSON_SUBINTERVALS = 8
DOMAIN_TOL = 1e-12


@dataclass(frozen=True)
class KnotVector:
    """Distinct breakpoints of a clamped cubic spline space.

    Endpoint knots are repeated ``DEGREE + 1`` times in :attr:`knots`, so the
    dimension is ``J = len(breakpoints) + 2``.
    """

    breakpoints: np.ndarray
    degree: int = DEGREE

    def __post_init__(self):
        bp = np.array(self.breakpoints, dtype=float)
        if bp.ndim != 1 or bp.size < 2:
            raise TooFewSegments("need at least two breakpoints")
        if not np.all(np.diff(bp) > 0):
            raise BadRange("breakpoints must be strictly increasing")
        bp.flags.writeable = False
        object.__setattr__(self, "breakpoints", bp)
        full = np.concatenate([[bp[0]] * DEGREE, bp, [bp[-1]] * DEGREE])
        full.flags.writeable = False
        object.__setattr__(self, "knots", full)

    @property
    def J(self) -> int:
        return self.breakpoints.size + DEGREE - 1

    @property
    def t1(self) -> float:
        return float(self.breakpoints[0])

    @property
    def tn(self) -> float:
        return float(self.breakpoints[-1])


def make_knots(t1: float, tn: float, num_segments: int) -> KnotVector:
    if not tn > t1:
        raise BadRange(f"need tn > t1, got [{t1}, {tn}]")
    if num_segments < 2:
        raise TooFewSegments(f"need at least 2 segments, got {num_segments}")
    bp = np.linspace(t1, tn, num_segments + 1)
    return KnotVector(bp)


def default_segments(n: int) -> int:
    """Data-scaled span count, about eight samples per span: ``n // 8`` in [10, 200]."""
    return min(200, max(10, n // 8))


def _check_domain(knots: KnotVector, t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    span = knots.tn - knots.t1
    lo, hi = knots.t1 - DOMAIN_TOL * span, knots.tn + DOMAIN_TOL * span
    bad = ~((t >= lo) & (t <= hi))
    if bad.any():
        raise OutOfDomain(
            f"t={t.flat[np.flatnonzero(bad)[0]]!r} outside [{knots.t1}, {knots.tn}]"
        )
    return np.clip(t, knots.t1, knots.tn)


def _ratio(num, den):
    # 0/0 := 0 convention for repeated knots
    safe = np.where(den > 0, den, 1.0)
    return np.where(den > 0, num / safe, 0.0)


def _cox_de_boor(knots: KnotVector, t: np.ndarray, deriv: int) -> np.ndarray:
    """Rows are evaluation points, columns basis functions."""
    tau = knots.knots
    t = t[:, None]
    nspan = tau.size - 1
    left, right = tau[:-1], tau[1:]
    b = ((t >= left) & (t < right)).astype(float)
    # closed right endpoint: last nonempty span owns t == tn
    last = np.flatnonzero(right > left)[-1]
    at_end = t[:, 0] >= knots.tn
    b[at_end, :] = 0.0
    b[at_end, last] = 1.0

    tables = [b]
    for p in range(1, DEGREE + 1):
        prev = tables[-1]
        i = np.arange(nspan - p)
        w_left = _ratio(t - tau[i], tau[i + p] - tau[i])
        w_right = _ratio(tau[i + p + 1] - t, tau[i + p + 1] - tau[i + 1])
        tables.append(w_left * prev[:, i] + w_right * prev[:, i + 1])

    if deriv == 0:
        return tables[DEGREE]
    if deriv != 2:
        raise ValueError("only derivative orders 0 and 2 are supported")

    def d_once(vals, p):
        # d/dt B_{i,p} = p * [B_{i,p-1}/(tau_{i+p}-tau_i) - B_{i+1,p-1}/(tau_{i+p+1}-tau_{i+1})]
        i = np.arange(vals.shape[1] - 1)
        a = _ratio(np.float64(p), tau[i + p] - tau[i])
        c = _ratio(np.float64(p), tau[i + p + 1] - tau[i + 1])
        return a * vals[:, i] - c * vals[:, i + 1]

    return d_once(d_once(tables[DEGREE - 2], DEGREE - 1), DEGREE)


def eval_basis(knots: KnotVector, t: float) -> np.ndarray:
    """Values of all ``J`` basis functions at ``t``."""
    tt = _check_domain(knots, np.atleast_1d(t))
    return _cox_de_boor(knots, tt, 0)[0]


def eval_basis_d2(knots: KnotVector, t: float) -> np.ndarray:
    """Second derivatives of all ``J`` basis functions at ``t``."""
    tt = _check_domain(knots, np.atleast_1d(t))
    return _cox_de_boor(knots, tt, 2)[0]


def basis_matrix(knots: KnotVector, t: np.ndarray, deriv: int = 0) -> np.ndarray:
    """Vectorized :func:`eval_basis` (``deriv=0``) or second derivative (``deriv=2``)."""
    tt = _check_domain(knots, np.atleast_1d(t))
    return _cox_de_boor(knots, tt, deriv)


def design_matrix(knots: KnotVector, grid: TimeGrid) -> np.ndarray:
    """The ``n x J`` matrix ``R[k, j] = phi_j(t_k)``."""
    return basis_matrix(knots, grid.times, 0)


def penalty_matrix(knots: KnotVector) -> np.ndarray:
    """Roughness penalty ``Q[i, j] = int phi_i'' phi_j'' dt``.

    Composite Simpson with 8 subintervals per span; the integrand is a
    quadratic on each span, so the rule is exact up to rounding.
    """
    bp = knots.breakpoints
    m = SIMPSON_SUBINTERVALS
    w = np.ones(m + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    J = knots.J
    q = np.zeros((J, J))
    for a, b in zip(bp[:-1], bp[1:]):
        s = np.linspace(a, b, m + 1)
        d2 = _cox_de_boor(knots, s, 2)
        q += (d2.T * (w * (b - a) / (3 * m))) @ d2
    return 0.5 * (q + q.T)
