"""Model serialization, equation text, and the Monte Carlo benchmark runner.

A benchmark is a sweep over cells ``(library, window, ic, method, nvr, seed)``.
Cells run independently (optionally in a process pool) and are sorted by
their position in the configured lists before any table is written, so the
output files depend only on the configuration.
"""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .benchmarks import NoiseSpec, add_noise, get_system, identify
from .core_types import SparseModel, TimeGrid
from .errors import IdentificationError, InputError
from .features import FeatureLibrary
from .odeint import simulate_model

log = logging.getLogger(__name__)

METHOD_TITLES = {"sindy": "SINDy", "insindy": "InSINDy", "isindy": "ISINDy"}
META_ORDER = ("method", "lambda", "rho_per_column", "seed")
DIVERGENCE_FRACTION = 0.10


# ---------------------------------------------------------------------------
# model JSON
# ---------------------------------------------------------------------------

def _plain(v):
    """Convert numpy scalars/arrays inside ``v`` to JSON-native values."""
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.ndarray):
        return _plain(v.tolist())
    if isinstance(v, np.generic):
        return v.item()
    return v


def model_to_dict(model: SparseModel) -> dict:
    meta = _plain(dict(model.meta))
    ordered = {k: meta.get(k) for k in META_ORDER}
    ordered.update({k: meta[k] for k in sorted(meta) if k not in META_ORDER})
    return {
        "d": model.d,
        "library": model.library.names,
        "xi": model.xi.tolist(),
        "eta": model.eta.tolist(),
        "eta_assumed": bool(model.eta_assumed),
        "meta": ordered,
    }


def dumps_model(model: SparseModel) -> str:
    return json.dumps(model_to_dict(model), indent=2) + "\n"


def model_from_dict(obj: dict) -> SparseModel:
    try:
        d = int(obj["d"])
        lib = FeatureLibrary.from_names(d, obj["library"])
        xi = np.array(obj["xi"], dtype=float).reshape(len(lib), d)
        eta = np.array(obj["eta"], dtype=float)
        return SparseModel(lib, xi, eta, bool(obj.get("eta_assumed", False)),
                           dict(obj.get("meta", {})))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"malformed model JSON: {exc}") from None


def loads_model(text: str) -> SparseModel:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"model file is not valid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise InputError("model JSON must be an object")
    return model_from_dict(obj)


def read_model(path) -> SparseModel:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read model {path}: {exc}") from None
    return loads_model(text)


# ---------------------------------------------------------------------------
# equation text
# ---------------------------------------------------------------------------

def format_equations(model: SparseModel, t1: float = 0.0, digits: int = 4) -> list[str]:
    """Identified system as text, e.g. ``dx1/dt = 1.6000*x1 - 1.0000*x1^2``."""
    names = model.library.names
    lines = []
    for i in range(model.d):
        terms = []
        for k in model.support[i]:
            c = model.xi[k, i]
            mag = f"{abs(c):.{digits}f}*{names[k]}"
            if not terms:
                terms.append(f"-{mag}" if c < 0 else mag)
            else:
                terms.append(f"- {mag}" if c < 0 else f"+ {mag}")
        lines.append(f"dx{i + 1}/dt = {' '.join(terms) if terms else '0'}")
    note = "  (first observation)" if model.eta_assumed else ""
    for i in range(model.d):
        lines.append(f"x{i + 1}({t1:g}) = {model.eta[i]:.{digits}f}{note}")
    return lines


# ---------------------------------------------------------------------------
# trajectory diagnostics
# ---------------------------------------------------------------------------

def attractor_diameter(truth: np.ndarray) -> float:
    """Diagonal of the bounding box of the true trajectory."""
    return float(np.linalg.norm(truth.max(axis=0) - truth.min(axis=0)))


def divergence_time(times: np.ndarray, truth: np.ndarray, predicted: np.ndarray,
                    fraction: float = DIVERGENCE_FRACTION) -> float:
    """First time any component deviates by more than ``fraction`` of the diameter.

    ``nan`` when the prediction stays within the band over the whole horizon.
    """
    band = fraction * attractor_diameter(truth)
    off = np.any(np.abs(predicted - truth) > band, axis=1)
    if not off.any():
        return float("nan")
    return float(times[int(np.argmax(off))])


def trajectory_rmse(truth: np.ndarray, predicted: np.ndarray) -> float:
    return float(np.sqrt(np.mean((predicted - truth) ** 2)))


# ---------------------------------------------------------------------------
# benchmark cells
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Cell:
    key: tuple
    system: str
    library: str
    window: tuple[float, float] | None
    ic: tuple[float, ...] | None
    method: str
    nvr: float
    seed: int
    lam: float
    segments: int | None


@dataclass
class CellResult:
    cell: Cell
    status: str = "ok"
    names: list[str] = field(default_factory=list)
    xi: np.ndarray | None = None
    eta: np.ndarray | None = None
    eta_assumed: bool = False
    support_correct: bool | None = None
    coef_error: float = float("nan")
    rmse: float = float("nan")
    divergence: float = float("nan")
    t1: float = 0.0
    plot: dict | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def run_cell(cell: Cell, keep_plot: bool = False) -> CellResult:
    """Simulate, perturb, identify and score a single configuration."""
    system = get_system(cell.system)
    lib = system.library(cell.library)
    res = CellResult(cell, names=lib.names)
    try:
        truth = system.simulate(cell.window, cell.ic).states
        res.t1 = truth.grid.t1
        obs = add_noise(truth, NoiseSpec(cell.nvr, cell.seed))
        model = identify(cell.method, obs, lib, cell.lam, cell.segments)
    except IdentificationError as exc:
        res.status = f"FAIL({type(exc).__name__})"
        log.warning("cell %s failed: %s", cell.key, exc)
        return res
    res.xi = np.array(model.xi)
    res.eta = np.array(model.eta)
    res.eta_assumed = model.eta_assumed
    try:
        true = system.true_model(lib)
    except InputError:
        # the library cannot express the field exactly (e.g. sin(x) by monomials)
        true = None
    if true is not None:
        res.support_correct = model.support == true.support
        res.coef_error = float(np.max(np.abs(model.xi - true.xi)))
    predicted = None
    try:
        predicted = simulate_model(model, truth.grid).values
        res.rmse = trajectory_rmse(truth.values, predicted)
        res.divergence = divergence_time(truth.grid.times, truth.values, predicted)
    except IdentificationError as exc:
        # the identified field escaped; report it as diverged from the start
        log.info("cell %s: identified model does not integrate: %s", cell.key, exc)
        res.rmse = float("inf")
        res.divergence = float(truth.grid.t1)
    if keep_plot:
        res.plot = {"times": truth.grid.times, "truth": truth.values,
                    "observations": obs.values if cell.nvr > 0 else None,
                    "identified": predicted}
    return res


def _run_one(args):
    return run_cell(*args)


def build_cells(system: str, methods: Sequence[str], nvr: Sequence[float],
                seeds: Sequence[int], lam: float, libraries: Sequence[str],
                windows: Sequence[tuple[float, float] | None],
                ics: Sequence[tuple[float, ...] | None],
                segments: int | None) -> list[Cell]:
    """Cartesian sweep; noise-free cells are run once with the first seed."""
    cells = []
    for a, lib in enumerate(libraries):
        for b, win in enumerate(windows):
            for c, ic in enumerate(ics):
                for e, level in enumerate(nvr):
                    for f, method in enumerate(methods):
                        for g, seed in enumerate(seeds[:1] if level == 0 else seeds):
                            cells.append(Cell((a, b, c, e, f, g), system, lib, win, ic,
                                              method, float(level), int(seed), lam,
                                              segments))
    return cells


def run_cells(cells: Sequence[Cell], jobs: int = 1,
              plot_filter=None) -> list[CellResult]:
    plot_filter = plot_filter or (lambda cell: False)
    args = [(c, bool(plot_filter(c))) for c in cells]
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, args, chunksize=1))
    else:
        results = [_run_one(a) for a in args]
    return sorted(results, key=lambda r: r.cell.key)


# ---------------------------------------------------------------------------
# tables
# ---------------------------------------------------------------------------

def _fmt(v: float) -> str:
    if v == 0.0:
        return "0"
    return f"{v:.4f}"


def _num(v: float) -> str:
    if v is None or (isinstance(v, float) and np.isnan(v)):
        return "nan"
    return f"{v:.6g}"


def window_label(win) -> str:
    return "" if win is None else f"{win[0]:g}:{win[1]:g}"


def ic_label(ic) -> str:
    return "" if ic is None else ";".join(f"{v:g}" for v in ic)


def _write(path: Path, header, rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def write_coefficient_table(path, results: Sequence[CellResult]) -> Path:
    """Wide coefficient table: rows ``eta`` then features; columns nvr x method.

    One block per (library, window, ic) group, taken from the first seed of
    each noise level.
    """
    groups: dict[tuple, dict] = {}
    for r in results:
        c = r.cell
        gkey = c.key[:3]
        g = groups.setdefault(gkey, {"cell": c, "names": r.names, "cols": {}})
        col = (c.key[3], c.key[4])
        if col not in g["cols"]:
            g["cols"][col] = r
    rows = []
    header = None
    for gkey in sorted(groups):
        g = groups[gkey]
        cols = [g["cols"][k] for k in sorted(g["cols"])]
        titles = [f"nvr={r.cell.nvr:g}:{METHOD_TITLES[r.cell.method]}" for r in cols]
        if header is None:
            header = ["library", "window", "ic", "term"] + titles
        c = g["cell"]
        lead = [c.library, window_label(c.window), ic_label(c.ic)]
        d = cols[0].xi.shape[1] if cols[0].xi is not None else None
        if d is None:
            d = next((r.xi.shape[1] for r in cols if r.xi is not None), 1)
        for i in range(d):
            suffix = f"_{i + 1}" if d > 1 else ""
            row = lead + [f"eta{suffix}"]
            for r in cols:
                if not r.ok:
                    row.append(r.status)
                elif r.eta_assumed:
                    row.append("---")
                else:
                    row.append(_fmt(r.eta[i]))
            rows.append(row)
            for k, name in enumerate(g["names"]):
                row = lead + [f"{name}{suffix}" if d > 1 else name]
                row += [r.status if not r.ok else _fmt(r.xi[k, i]) for r in cols]
                rows.append(row)
    return _write(Path(path), header or ["library", "window", "ic", "term"], rows)


def write_long_coefficients(path, results: Sequence[CellResult]) -> Path:
    header = ["library", "window", "ic", "method", "nvr", "seed", "status",
              "component", "term", "value"]
    rows = []
    for r in results:
        c = r.cell
        lead = [c.library, window_label(c.window), ic_label(c.ic), c.method,
                f"{c.nvr:g}", c.seed, r.status]
        if not r.ok:
            rows.append(lead + ["", "", ""])
            continue
        for i in range(r.xi.shape[1]):
            eta = "" if r.eta_assumed else repr(float(r.eta[i]))
            rows.append(lead + [i + 1, "eta", eta])
            for k, name in enumerate(r.names):
                rows.append(lead + [i + 1, name, repr(float(r.xi[k, i]))])
    return _write(Path(path), header, rows)


def support_summary(results: Sequence[CellResult]) -> list[list]:
    agg: dict[tuple, list] = {}
    for r in results:
        c = r.cell
        k = (c.key[0], c.key[1], c.key[2], c.key[3], c.key[4])
        a = agg.setdefault(k, [c, 0, 0, 0, True])
        a[1] += 1
        if not r.ok:
            a[3] += 1
        elif r.support_correct is None:
            a[4] = False
        else:
            a[2] += r.support_correct
    rows = []
    for k in sorted(agg):
        c, total, correct, failed, scored = agg[k]
        lead = [c.library, window_label(c.window), ic_label(c.ic), c.method, f"{c.nvr:g}"]
        if scored:
            rows.append(lead + [total, correct, failed, f"{correct / total:.4f}"])
        else:
            rows.append(lead + [total, "n/a", failed, "n/a"])
    return rows


def write_support(path, results: Sequence[CellResult]) -> Path:
    header = ["library", "window", "ic", "method", "nvr", "replicates", "correct",
              "failed", "rate"]
    return _write(Path(path), header, support_summary(results))


def write_summary(path, results: Sequence[CellResult]) -> Path:
    header = ["library", "window", "ic", "method", "nvr", "seed", "status",
              "support_correct", "max_coef_error", "rmse", "divergence_time"]
    rows = []
    for r in results:
        c = r.cell
        rows.append([c.library, window_label(c.window), ic_label(c.ic), c.method,
                     f"{c.nvr:g}", c.seed, r.status,
                     "" if r.support_correct is None else int(r.support_correct),
                     _num(r.coef_error), _num(r.rmse), _num(r.divergence)])
    return _write(Path(path), header, rows)


def write_ic_table(path, results: Sequence[CellResult]) -> Path:
    """Initial-condition sweep layout: one column per IC, one block per library."""
    by_lib: dict[int, dict] = {}
    for r in results:
        c = r.cell
        if c.key[1] != 0 or c.key[3] != 0 or c.key[5] != 0:
            continue
        blk = by_lib.setdefault(c.key[0], {"lib": c.library, "names": r.names,
                                           "method": c.method, "cols": {}})
        if c.method == blk["method"]:
            blk["cols"][c.key[2]] = r
    ics = sorted({r.cell.key[2]: r.cell.ic for r in results}.items())
    header = ["library", "term"] + [ic_label(ic) for _, ic in ics]
    rows = []
    for a in sorted(by_lib):
        blk = by_lib[a]
        cols = [blk["cols"].get(k) for k, _ in ics]
        d = next((r.xi.shape[1] for r in cols if r is not None and r.ok), 1)
        for i in range(d):
            suffix = f"_{i + 1}" if d > 1 else ""

            def cell_value(r, value):
                if r is None:
                    return ""
                if not r.ok:
                    return r.status
                return value(r)

            rows.append([blk["lib"], f"eta{suffix}"] + [
                cell_value(r, lambda r: "---" if r.eta_assumed else _fmt(r.eta[i]))
                for r in cols])
            for k, name in enumerate(blk["names"]):
                rows.append([blk["lib"], f"{name}{suffix}"] + [
                    cell_value(r, lambda r: _fmt(r.xi[k, i])) for r in cols])
    return _write(Path(path), header, rows)
