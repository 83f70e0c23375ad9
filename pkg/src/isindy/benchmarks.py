"""Benchmark systems, the noise-variance-ratio noise model, and identifiers.

Three identification routes are provided:

* :func:`isindy_identify` - spline smoothing, trapezoid integral regression
  with the initial condition estimated as an intercept.
* :func:`sindy_identify` - central-difference derivatives of the raw data.
* :func:`insindy_identify` - explicit-Euler integral regression of the raw
  data with the initial condition pinned to the first observation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .basis import default_segments
from .core_types import ObservationSet, SparseModel, StateMatrix, TimeGrid, validate_observations
from .errors import InputError, TooShort
from .features import FeatureLibrary, evaluate, parse_library_spec
from .odeint import Trajectory, rk4_integrate
from .regression import cumulative_rectangle
from .smoothing import smooth_dataset
from .solver import FitDiagnostics, StlsConfig, sequential_threshold, stls_identify

NVR_CAP = 10.0
METHODS = ("sindy", "insindy", "isindy")


# Closed-form fields; terms are written in canonical library order so that
# SparseModel.rhs reproduces them bit for bit.
def _logistic(x):
    return np.array([1.6 * x[0] - x[0] * x[0]])


def _lotka_volterra(x):
    return np.array([
        (2.0 / 3.0) * x[0] - (4.0 / 3.0) * (x[0] * x[1]),
        -x[1] + x[0] * x[1],
    ])


def _lorenz(x):
    return np.array([
        -10.0 * x[0] + 10.0 * x[1],
        28.0 * x[0] - x[1] - x[0] * x[2],
        -(8.0 / 3.0) * x[2] + x[0] * x[1],
    ])


def _sine(x):
    return np.array([-np.sin(x[0])])


@dataclass(frozen=True)
class BenchmarkSystem:
    name: str
    d: int
    field: Callable[[np.ndarray], np.ndarray]
    eta: tuple[float, ...]
    t_range: tuple[float, float]
    h: float
    lam: float
    library_spec: str
    true_terms: tuple[dict, ...]
    nvr_levels: tuple[float, ...]

    def library(self, spec: str | None = None) -> FeatureLibrary:
        return parse_library_spec(spec or self.library_spec, self.d)

    def true_xi(self, library: FeatureLibrary | None = None) -> np.ndarray:
        """True coefficients in ``library``; raises if a true term is missing."""
        lib = library or self.library()
        names = lib.names
        xi = np.zeros((len(lib), self.d))
        for i, terms in enumerate(self.true_terms):
            for name, coef in terms.items():
                if name not in names:
                    raise InputError(f"library lacks true term {name!r} of {self.name}")
                xi[names.index(name), i] = coef
        return xi

    def true_model(self, library: FeatureLibrary | None = None) -> SparseModel:
        lib = library or self.library()
        return SparseModel(lib, self.true_xi(lib), np.array(self.eta))

    def grid(self, t_range: tuple[float, float] | None = None) -> TimeGrid:
        t1, tn = t_range or self.t_range
        return TimeGrid.from_range(t1, tn, self.h)

    def simulate(self, t_range: tuple[float, float] | None = None,
                 eta=None) -> Trajectory:
        """Ground truth on ``t_range``.

        The canonical initial condition applies at ``t = 0``; windows that
        start later are cut from a trajectory integrated from 0.
        """
        t1, tn = t_range or self.t_range
        x0 = self.eta if eta is None else eta
        if t1 <= 0.0:
            return rk4_integrate(self.field, x0, self.grid((t1, tn)), self.labels)
        full = rk4_integrate(self.field, x0, self.grid((0.0, tn)), self.labels)
        k0 = int(round(t1 / self.h))
        grid = TimeGrid(full.grid.time(k0 + 1), self.h, full.grid.n - k0)
        return Trajectory(grid, StateMatrix(grid, full.values[k0:], self.labels))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(f"x{i + 1}" for i in range(self.d))


SYSTEMS = {
    "logistic": BenchmarkSystem(
        "logistic", 1, _logistic, (0.1,), (0.0, 6.0), 0.01, 0.1, "poly:3",
        ({"x1": 1.6, "x1^2": -1.0},), (0.0, 0.1, 0.3, 0.5)),
    "lotka_volterra": BenchmarkSystem(
        "lotka_volterra", 2, _lotka_volterra, (1.8, 1.8), (0.0, 10.0), 0.01, 0.3,
        "poly:3",
        ({"x1": 2.0 / 3.0, "x1x2": -4.0 / 3.0}, {"x2": -1.0, "x1x2": 1.0}),
        (0.0, 0.05, 0.10, 0.15)),
    "lorenz": BenchmarkSystem(
        "lorenz", 3, _lorenz, (-5.0, 10.0, 30.0), (0.0, 5.0), 0.005, 0.8, "poly:3",
        ({"x1": -10.0, "x2": 10.0},
         {"x1": 28.0, "x2": -1.0, "x1x3": -1.0},
         {"x3": -8.0 / 3.0, "x1x2": 1.0}),
        (0.0, 0.05, 0.10, 0.15)),
    "sine": BenchmarkSystem(
        "sine", 1, _sine, (0.4,), (0.0, 5.0), 0.005, 0.0075, "trig:2",
        ({"sin(x1)": -1.0},), (0.0,)),
}

SINE_LIBRARIES = ("poly:3", "poly:5", "trig:2", "poly:3+trig:2")
SINE_ICS = tuple(round(v, 1) for v in np.arange(-1.0, 1.01, 0.2) if abs(v) > 1e-9)


def get_system(name: str) -> BenchmarkSystem:
    try:
        return SYSTEMS[name]
    except KeyError:
        raise InputError(f"unknown system {name!r}; choose from {sorted(SYSTEMS)}") from None


@dataclass(frozen=True)
class NoiseSpec:
    """Noise level as a fraction of each column's standard deviation."""

    nvr: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.nvr < NVR_CAP:
            raise InputError(f"nvr must lie in [0, {NVR_CAP}), got {self.nvr!r}")


def standard_normals(count: int, seed: int) -> np.ndarray:
    """Box-Muller normals from the PCG64 uniform stream of ``seed``.

    Uniform pairs ``(u1, u2)`` are consumed in order and produce
    ``r cos(2 pi u2)`` then ``r sin(2 pi u2)`` with ``r = sqrt(-2 ln(1 - u1))``.
    """
    pairs = (count + 1) // 2
    rng = np.random.Generator(np.random.PCG64(seed))
    u = rng.random(2 * pairs)
    r = np.sqrt(-2.0 * np.log1p(-u[0::2]))
    angle = 2.0 * np.pi * u[1::2]
    z = np.empty(2 * pairs)
    z[0::2] = r * np.cos(angle)
    z[1::2] = r * np.sin(angle)
    return z[:count]


def add_noise(truth: StateMatrix, spec: NoiseSpec) -> ObservationSet:
    """Add independent Gaussian noise with std ``nvr * std(x_i)`` per column.

    Draws fill column 1 completely before column 2, and so on.
    """
    x = truth.values
    if not np.all(np.isfinite(x)):
        raise InputError("truth contains non-finite values")
    if spec.nvr == 0.0:
        return ObservationSet(truth.grid, x.copy(), truth.labels)
    n, d = x.shape
    sigma = spec.nvr * np.std(x, axis=0)
    z = standard_normals(n * d, spec.seed).reshape(d, n).T
    return ObservationSet(truth.grid, x + z * sigma, truth.labels)


def _check_short(obs):
    if obs.n < 3:
        raise TooShort(obs.n)


# fourth-order one-sided weights (times 12 h) for the first two samples
_EDGE0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0])
_EDGE1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0])


def central_difference(y: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order finite-difference derivative along axis 0.

    Interior samples use the five-point central stencil; the two samples at
    each end use fourth-order one-sided stencils.  Fewer than five samples
    fall back to second-order differences.
    """
    y = np.asarray(y, dtype=float)
    if y.shape[0] < 5:
        return np.gradient(y, h, axis=0, edge_order=2)
    dy = np.empty_like(y)
    dy[2:-2] = (-y[4:] + 8.0 * y[3:-1] - 8.0 * y[1:-3] + y[:-4]) / (12.0 * h)
    head, tail = y[:5], y[::-1][:5]
    dy[0] = np.tensordot(_EDGE0, head, axes=1) / (12.0 * h)
    dy[1] = np.tensordot(_EDGE1, head, axes=1) / (12.0 * h)
    dy[-1] = -np.tensordot(_EDGE0, tail, axes=1) / (12.0 * h)
    dy[-2] = -np.tensordot(_EDGE1, tail, axes=1) / (12.0 * h)
    return dy


def sindy_identify(obs: ObservationSet, lib: FeatureLibrary, lam,
                   config: StlsConfig | None = None) -> SparseModel:
    """Derivative-based baseline on the raw observations."""
    _check_short(obs)
    config = config or StlsConfig(lam)
    lams = config.lambdas(obs.d)
    y = obs.values
    dydt = central_difference(y, obs.grid.h)
    theta = evaluate(lib, y)
    xi = np.zeros((len(lib), obs.d))
    for i in range(obs.d):
        xi[:, i], _, _ = sequential_threshold(
            theta, dydt[:, i], lams[i], intercept=False,
            max_iterations=config.max_iterations,
            rank_tolerance=config.rank_tolerance, column=i, strict=config.strict)
    return SparseModel(lib, xi, y[0].copy(), eta_assumed=True,
                       meta={"method": "sindy", "lambda": lams.tolist()})


def insindy_identify(obs: ObservationSet, lib: FeatureLibrary, lam,
                     config: StlsConfig | None = None, rule: str = "right") -> SparseModel:
    """Integral baseline: Euler quadrature, initial condition fixed to ``y(t1)``.

    The default right-endpoint sum ``x_k = x_1 + h * sum_{j=2..k} Theta(x_j)``
    is the backward-Euler form; ``rule="left"`` gives the forward form.
    """
    _check_short(obs)
    config = config or StlsConfig(lam)
    lams = config.lambdas(obs.d)
    y = obs.values
    design = cumulative_rectangle(evaluate(lib, y), obs.grid.h, rule)
    xi = np.zeros((len(lib), obs.d))
    for i in range(obs.d):
        target = y[1:, i] - y[0, i]
        xi[:, i], _, _ = sequential_threshold(
            design, target, lams[i], intercept=False,
            max_iterations=config.max_iterations,
            rank_tolerance=config.rank_tolerance, column=i, strict=config.strict)
    return SparseModel(lib, xi, y[0].copy(), eta_assumed=True,
                       meta={"method": "insindy", "lambda": lams.tolist(), "rule": rule})


def isindy_identify(obs: ObservationSet, lib: FeatureLibrary, lam,
                    num_segments: int | None = None,
                    config: StlsConfig | None = None
                    ) -> tuple[SparseModel, FitDiagnostics]:
    """Smooth, build the integral regression, and run STLS with estimated ``eta``."""
    validate_observations(obs)
    config = config or StlsConfig(lam)
    segments = num_segments or default_segments(obs.n)
    states, splines = smooth_dataset(obs, segments)
    theta = evaluate(lib, states)
    model, diag = stls_identify(theta, states, config, lib)
    meta = dict(model.meta, method="isindy", segments=segments,
                rho_per_column=[s.rho for s in splines])
    model = SparseModel(lib, model.xi, model.eta, eta_assumed=False, meta=meta)
    return model, diag


def identify(method: str, obs: ObservationSet, lib: FeatureLibrary, lam,
             num_segments: int | None = None) -> SparseModel:
    if method == "isindy":
        return isindy_identify(obs, lib, lam, num_segments)[0]
    if method == "sindy":
        return sindy_identify(obs, lib, lam)
    if method == "insindy":
        return insindy_identify(obs, lib, lam)
    raise InputError(f"unknown method {method!r}; choose from {METHODS}")
