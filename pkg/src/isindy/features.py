"""Candidate feature libraries: monomials and integer-multiple sinusoids."""

from __future__ import annotations

import re
from dataclasses import dataclass
from itertools import combinations_with_replacement
from typing import Iterable, Sequence

import numpy as np

from .core_types import StateMatrix
from .errors import DimensionMismatch, InputError, NonFinite

MONOMIAL = "monomial"
SINE = "sine"
COSINE = "cosine"


def _var(i: int) -> str:
    return f"x{i + 1}"


@dataclass(frozen=True)
class FeatureDescriptor:
    """One candidate term.

    Monomials carry ``exponents`` (length ``d``); sinusoids carry the
    0-based ``variable`` index and integer frequency ``multiple``.
    """

    kind: str
    exponents: tuple[int, ...] = ()
    variable: int = -1
    multiple: int = 0

    def __post_init__(self):
        if self.kind == MONOMIAL:
            if any(e < 0 for e in self.exponents) or sum(self.exponents) < 1:
                raise InputError(f"monomial needs total degree >= 1: {self.exponents}")
        elif self.kind in (SINE, COSINE):
            if self.variable < 0 or self.multiple < 1:
                raise InputError("trig feature needs a variable and a multiple >= 1")
        else:
            raise InputError(f"unknown feature kind {self.kind!r}")

    def name(self, d: int) -> str:
        if self.kind == MONOMIAL:
            sep = "*" if d >= 10 else ""
            parts = []
            for i, e in enumerate(self.exponents):
                if e == 1:
                    parts.append(_var(i))
                elif e > 1:
                    parts.append(f"{_var(i)}^{e}")
            return sep.join(parts)
        fn = "sin" if self.kind == SINE else "cos"
        k = "" if self.multiple == 1 else str(self.multiple)
        return f"{fn}({k}{_var(self.variable)})"

    def __call__(self, x: np.ndarray) -> np.ndarray:
        """Evaluate on the rows of ``x`` (shape ``(n, d)``)."""
        if self.kind == MONOMIAL:
            out = None
            for i, e in enumerate(self.exponents):
                for _ in range(e):
                    out = x[:, i].copy() if out is None else out * x[:, i]
            return out
        arg = self.multiple * x[:, self.variable]
        return np.sin(arg) if self.kind == SINE else np.cos(arg)


_TRIG_RE = re.compile(r"^(sin|cos)\((\d*)x(\d+)\)$")
_FACTOR_RE = re.compile(r"x(\d+)(?:\^(\d+))?\*?")


def parse_feature(name: str, d: int) -> FeatureDescriptor:
    """Inverse of :meth:`FeatureDescriptor.name`."""
    name = name.strip()
    m = _TRIG_RE.match(name)
    if m:
        var = int(m.group(3)) - 1
        if not 0 <= var < d:
            raise DimensionMismatch(f"{name!r} refers to a variable beyond d={d}")
        kind = SINE if m.group(1) == "sin" else COSINE
        return FeatureDescriptor(kind, variable=var, multiple=int(m.group(2) or 1))
    exps = [0] * d
    pos = 0
    while pos < len(name):
        f = _FACTOR_RE.match(name, pos)
        if not f:
            raise InputError(f"cannot parse feature name {name!r}")
        var = int(f.group(1)) - 1
        if not 0 <= var < d:
            raise DimensionMismatch(f"{name!r} refers to a variable beyond d={d}")
        exps[var] += int(f.group(2) or 1)
        pos = f.end()
    return FeatureDescriptor(MONOMIAL, exponents=tuple(exps))


class FeatureLibrary:
    """Ordered, duplicate-free collection of features over ``d`` variables."""

    def __init__(self, d: int, descriptors: Iterable[FeatureDescriptor]):
        if d < 1:
            raise InputError("state dimension must be >= 1")
        self.d = int(d)
        self.descriptors = tuple(descriptors)
        if len(set(self.descriptors)) != len(self.descriptors):
            raise InputError("feature library contains duplicates")
        for f in self.descriptors:
            if f.kind == MONOMIAL and len(f.exponents) != d:
                raise DimensionMismatch(f"monomial {f.exponents} does not match d={d}")
            if f.kind != MONOMIAL and f.variable >= d:
                raise DimensionMismatch(f"trig feature variable beyond d={d}")

    def __len__(self):
        return len(self.descriptors)

    def __iter__(self):
        return iter(self.descriptors)

    def __getitem__(self, k):
        return self.descriptors[k]

    def __eq__(self, other):
        return (isinstance(other, FeatureLibrary) and self.d == other.d
                and self.descriptors == other.descriptors)

    def __hash__(self):
        return hash((self.d, self.descriptors))

    def __repr__(self):
        return f"FeatureLibrary(d={self.d}, [{', '.join(self.names)}])"

    @property
    def names(self) -> list[str]:
        return [f.name(self.d) for f in self.descriptors]

    @classmethod
    def from_names(cls, d: int, names: Sequence[str]) -> "FeatureLibrary":
        return cls(d, [parse_feature(s, d) for s in names])

    def evaluate_point(self, x: np.ndarray) -> np.ndarray:
        return evaluate_array(self, np.asarray(x, dtype=float)[None, :])[0]


def polynomial_library(d: int, degree: int) -> FeatureLibrary:
    """All monomials of total degree ``1..degree``, degree-major."""
    if d < 1 or degree < 1:
        raise InputError("polynomial library needs d >= 1 and degree >= 1")
    feats = []
    for p in range(1, degree + 1):
        for combo in combinations_with_replacement(range(d), p):
            exps = [0] * d
            for i in combo:
                exps[i] += 1
            feats.append(FeatureDescriptor(MONOMIAL, exponents=tuple(exps)))
    return FeatureLibrary(d, feats)


def trig_library(d: int, max_multiple: int) -> FeatureLibrary:
    if d < 1 or max_multiple < 1:
        raise InputError("trig library needs d >= 1 and max_multiple >= 1")
    feats = []
    for i in range(d):
        for k in range(1, max_multiple + 1):
            feats.append(FeatureDescriptor(SINE, variable=i, multiple=k))
            feats.append(FeatureDescriptor(COSINE, variable=i, multiple=k))
    return FeatureLibrary(d, feats)


def combine(a: FeatureLibrary, b: FeatureLibrary) -> FeatureLibrary:
    """Concatenate ``a`` then ``b``, keeping the first copy of duplicates."""
    if a.d != b.d:
        raise DimensionMismatch(f"cannot combine libraries with d={a.d} and d={b.d}")
    seen = dict.fromkeys(a.descriptors)
    for f in b.descriptors:
        seen.setdefault(f, None)
    return FeatureLibrary(a.d, seen)


def parse_library_spec(spec: str, d: int) -> FeatureLibrary:
    """Build a library from ``poly:<degree>``, ``trig:<k>`` or a ``+`` join."""
    lib = None
    for part in spec.replace(" ", "").split("+"):
        kind, _, arg = part.partition(":")
        try:
            val = int(arg)
        except ValueError:
            raise InputError(f"bad library term {part!r} in {spec!r}") from None
        if kind == "poly":
            piece = polynomial_library(d, val)
        elif kind == "trig":
            piece = trig_library(d, val)
        else:
            raise InputError(f"unknown library kind {kind!r} in {spec!r}")
        lib = piece if lib is None else combine(lib, piece)
    if lib is None:
        raise InputError("empty library spec")
    return lib


def evaluate_array(lib: FeatureLibrary, x: np.ndarray) -> np.ndarray:
    if x.ndim != 2 or x.shape[1] != lib.d:
        raise DimensionMismatch(f"states have shape {x.shape}, library expects d={lib.d}")
    theta = np.empty((x.shape[0], len(lib)))
    # overflow surfaces as inf and is reported by evaluate()
    with np.errstate(over="ignore", invalid="ignore"):
        for k, f in enumerate(lib.descriptors):
            theta[:, k] = f(x)
    return theta


def evaluate(lib: FeatureLibrary, states: StateMatrix | np.ndarray) -> np.ndarray:
    """The ``n x m`` data matrix with column ``k`` equal to feature ``k`` row-wise."""
    x = states.values if isinstance(states, StateMatrix) else np.asarray(states, float)
    if x.ndim == 1:
        x = x[:, None]
    theta = evaluate_array(lib, x)
    bad = ~np.isfinite(theta)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise NonFinite(int(r), int(c), what=f"feature {lib.names[c]}")
    return theta
