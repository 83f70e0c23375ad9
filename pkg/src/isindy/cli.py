"""Command line interface: ``simulate``, ``smooth``, ``identify``, ``benchmark``.

Every option may also come from a flat JSON file given by ``--config``; keys
are the long option names (``output-dir`` or ``output_dir``).  Options given
on the command line override the file.  Exit codes: 0 success, 1 when some
benchmark cells failed, 2 for input or configuration errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from .basis import default_segments
from .benchmarks import (METHODS, SINE_ICS, SINE_LIBRARIES, SYSTEMS, NoiseSpec, add_noise,
                         get_system, identify)
from .core_types import ObservationSet, TimeGrid, read_csv, write_csv
from .errors import IdentificationError, InputError
from .features import parse_library_spec
from .odeint import simulate_model
from .report import (CellResult, build_cells, dumps_model, format_equations, read_model,
                     run_cells, write_coefficient_table, write_ic_table,
                     write_long_coefficients, write_summary, write_support)
from .smoothing import smooth_dataset

log = logging.getLogger("isindy")

EXIT_OK, EXIT_PARTIAL, EXIT_INPUT = 0, 1, 2
COMMANDS = ("simulate", "smooth", "identify", "benchmark")


# ---------------------------------------------------------------------------
# value parsers (shared by flags and config files)
# ---------------------------------------------------------------------------

def _split(text) -> list[str]:
    if isinstance(text, (list, tuple)):
        return [str(t) for t in text]
    return [t for t in str(text).replace(" ", "").split(",") if t]


def parse_float_list(text) -> list[float]:
    try:
        return [float(t) for t in _split(text)]
    except ValueError:
        raise InputError(f"expected comma-separated numbers, got {text!r}") from None


def parse_seeds(text) -> list[int]:
    """``1..20``, ``1,4,9`` or a mix such as ``1..3,10``."""
    if isinstance(text, int):
        return [text]
    seeds = []
    for part in _split(text):
        try:
            if ".." in part:
                a, b = part.split("..")
                lo, hi = int(a), int(b)
                if hi < lo:
                    raise ValueError
                seeds.extend(range(lo, hi + 1))
            else:
                seeds.append(int(part))
        except ValueError:
            raise InputError(f"bad seed list {text!r}; use e.g. 1..20 or 1,2,3") from None
    if not seeds or any(s < 0 for s in seeds):
        raise InputError(f"bad seed list {text!r}")
    return seeds


def parse_windows(text) -> list[tuple[float, float]]:
    """``3:7`` or several windows separated by commas."""
    out = []
    for part in _split(text):
        a, sep, b = part.partition(":")
        try:
            lo, hi = float(a), float(b)
        except ValueError:
            raise InputError(f"bad time range {part!r}; use start:end") from None
        if not sep or not hi > lo:
            raise InputError(f"bad time range {part!r}; need start < end")
        out.append((lo, hi))
    return out


def parse_ics(text) -> list[tuple[float, ...]]:
    """Initial conditions separated by commas, components by ``/``."""
    out = []
    for part in _split(text):
        try:
            out.append(tuple(float(v) for v in part.split("/")))
        except ValueError:
            raise InputError(f"bad initial condition {part!r}") from None
    return out


def parse_methods(text) -> list[str]:
    methods = _split(text)
    if methods == ["all"]:
        return list(METHODS)
    for m in methods:
        if m not in METHODS:
            raise InputError(f"unknown method {m!r}; choose from {', '.join(METHODS)}")
    return methods


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass
class RunConfig:
    command: str
    input: str | None = None
    output_dir: str = "."
    system: str | None = None
    model: str | None = None
    library: list[str] | None = None
    lam: float | None = None
    nvr: list[float] | None = None
    seeds: list[int] | None = None
    seed: int | None = None
    segments: int | None = None
    method: list[str] | None = None
    time_range: list[tuple[float, float]] | None = None
    step: float | None = None
    ics: list[tuple[float, ...]] | None = None
    jobs: int = 1
    plots: bool = True
    verbose: bool = False

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise InputError(f"unknown command {self.command!r}")
        if self.system is not None:
            get_system(self.system)
        if self.lam is not None and not self.lam >= 0:
            raise InputError(f"lambda must be non-negative, got {self.lam}")
        for level in self.nvr or ():
            NoiseSpec(level)
        if self.segments is not None and self.segments < 2:
            raise InputError(f"--segments must be >= 2, got {self.segments}")
        if self.jobs < 1:
            raise InputError(f"--jobs must be >= 1, got {self.jobs}")
        if self.step is not None and not self.step > 0:
            raise InputError(f"--step must be positive, got {self.step}")
        if self.command in ("smooth", "identify") and not self.input:
            raise InputError(f"{self.command} needs --input")
        if self.command == "identify" and self.method and len(self.method) != 1:
            raise InputError("identify takes a single --method")
        if self.command == "benchmark" and not self.system:
            raise InputError(f"benchmark needs --system ({', '.join(SYSTEMS)})")
        if self.command == "simulate":
            if bool(self.system) == bool(self.model):
                raise InputError("simulate needs exactly one of --system or --model")
            if self.nvr and len(self.nvr) > 1:
                raise InputError("simulate takes a single --nvr level")
            if self.model and not self.time_range:
                raise InputError("simulate --model needs --time-range")
        if self.time_range and self.command != "benchmark" and len(self.time_range) > 1:
            raise InputError(f"{self.command} takes a single --time-range")
        d = get_system(self.system).d if self.system else None
        if d is not None:
            for spec in self.library or ():
                parse_library_spec(spec, d)
            for ic in self.ics or ():
                if len(ic) != d:
                    raise InputError(f"initial condition {ic} has {len(ic)} components, "
                                     f"{self.system} has {d}")
        return self


# option name -> (RunConfig field, parser)
OPTIONS = {
    "input": ("input", str),
    "output-dir": ("output_dir", str),
    "system": ("system", str),
    "model": ("model", str),
    "library": ("library", lambda v: _split(v)),
    "lambda": ("lam", float),
    "nvr": ("nvr", parse_float_list),
    "seeds": ("seeds", parse_seeds),
    "seed": ("seed", int),
    "segments": ("segments", int),
    "method": ("method", parse_methods),
    "time-range": ("time_range", parse_windows),
    "step": ("step", float),
    "ics": ("ics", parse_ics),
    "jobs": ("jobs", int),
    "plots": ("plots", bool),
    "verbose": ("verbose", bool),
}


def _convert(option: str, value):
    dest, parser = OPTIONS[option]
    try:
        return dest, parser(value)
    except InputError:
        raise
    except (TypeError, ValueError):
        raise InputError(f"bad value for {option}: {value!r}") from None


def load_config_file(path) -> dict:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise InputError(f"config {path} must be a JSON object")
    out = {}
    for key, value in raw.items():
        option = key.replace("_", "-")
        if option not in OPTIONS:
            raise InputError(f"unknown config key {key!r} in {path}")
        dest, conv = _convert(option, value)
        out[dest] = conv
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat JSON file with option values")
    common.add_argument("--input", help="observations CSV (t,<x1>,...)")
    common.add_argument("--output-dir", help="directory for output files")
    common.add_argument("--system", help=f"benchmark system: {', '.join(SYSTEMS)}")
    common.add_argument("--model", help="SparseModel JSON to simulate")
    common.add_argument("--library", help="feature library, e.g. poly:3 or poly:3+trig:2; "
                        "benchmark accepts a comma list")
    common.add_argument("--lambda", dest="lam", help="STLS threshold")
    common.add_argument("--nvr", help="noise-variance ratio(s), e.g. 0,0.1,0.3")
    common.add_argument("--seeds", help="seed list, e.g. 1..20")
    common.add_argument("--seed", help="single noise seed (simulate)")
    common.add_argument("--segments", help="number of spline spans (default n//8)")
    common.add_argument("--method", help="isindy, sindy, insindy (benchmark: list or all)")
    common.add_argument("--time-range", help="start:end; benchmark accepts a comma list")
    common.add_argument("--step", help="time step for simulate --model")
    common.add_argument("--ics", help="initial conditions, components split by '/'")
    common.add_argument("--jobs", help="worker processes for benchmark cells")
    common.add_argument("--no-plots", dest="plots", action="store_const", const="",
                        help="skip SVG figures")
    common.add_argument("-v", "--verbose", action="store_const", const="1")

    parser = argparse.ArgumentParser(
        prog="isindy", description="Integral sparse identification of nonlinear dynamics.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="simulate a benchmark or a model")
    sub.add_parser("smooth", parents=[common], help="penalized spline smoothing with GCV")
    sub.add_parser("identify", parents=[common], help="identify a sparse model from CSV")
    sub.add_parser("benchmark", parents=[common], help="Monte Carlo benchmark sweep")
    return parser


def config_from_args(argv: Sequence[str] | None = None) -> RunConfig:
    args = build_parser().parse_args(argv)
    values = load_config_file(args.config) if args.config else {}
    for option, (dest, _) in OPTIONS.items():
        raw = getattr(args, dest if option == "lambda" else option.replace("-", "_"), None)
        if raw is None:
            continue
        if option in ("plots", "verbose"):
            values[dest] = bool(raw)
            continue
        values[dest] = _convert(option, raw)[1]
    known = {f.name for f in fields(RunConfig)}
    return RunConfig(command=args.command,
                     **{k: v for k, v in values.items() if k in known}).validate()


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InputError(f"cannot create output directory {out}: {exc}") from None
    return out


def _crop(obs: ObservationSet, window) -> ObservationSet:
    t = obs.grid.times
    tol = 1e-9 * obs.grid.h
    keep = np.flatnonzero((t >= window[0] - tol) & (t <= window[1] + tol))
    if keep.size < 3:
        raise InputError(f"time range {window} keeps {keep.size} samples")
    grid = TimeGrid(float(t[keep[0]]), obs.grid.h, int(keep.size))
    return ObservationSet(grid, obs.values[keep], obs.labels)


def cmd_simulate(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    level = cfg.nvr[0] if cfg.nvr else 0.0
    seed = cfg.seed if cfg.seed is not None else (cfg.seeds[0] if cfg.seeds else 1)
    window = cfg.time_range[0] if cfg.time_range else None
    if cfg.model:
        model = read_model(cfg.model)
        grid = TimeGrid.from_range(window[0], window[1], cfg.step or 0.01)
        truth = simulate_model(model, grid).states
    else:
        system = get_system(cfg.system)
        ic = cfg.ics[0] if cfg.ics else None
        if cfg.step is not None:
            raise InputError("--step only applies to simulate --model")
        truth = system.simulate(window, ic).states
    paths = [write_csv(out / "truth.csv", truth.grid, truth.values, truth.labels)]
    if level > 0:
        obs = add_noise(truth, NoiseSpec(level, seed))
        paths.append(write_csv(out / "observations.csv", obs.grid, obs.values, obs.labels))
    for p in paths:
        print(p)
    return EXIT_OK


def cmd_smooth(cfg: RunConfig) -> int:
    obs = read_csv(cfg.input)
    if cfg.time_range:
        obs = _crop(obs, cfg.time_range[0])
    out = _outdir(cfg)
    segments = cfg.segments or default_segments(obs.n)
    states, splines = smooth_dataset(obs, segments)
    path = write_csv(out / "smoothed.csv", states.grid, states.values, states.labels)
    summary = out / "smoothing_summary.csv"
    with open(summary, "w") as fh:
        fh.write("column,segments,rho,gcv\n")
        for label, s in zip(obs.labels, splines):
            fh.write(f"{label},{segments},{s.rho:.17g},{s.gcv:.17g}\n")
    for label, s in zip(obs.labels, splines):
        print(f"{label}: rho = {s.rho:.4g}, GCV = {s.gcv:.4g}")
    print(path)
    print(summary)
    return EXIT_OK


def cmd_identify(cfg: RunConfig) -> int:
    obs = read_csv(cfg.input)
    if cfg.time_range:
        obs = _crop(obs, cfg.time_range[0])
    if cfg.library and len(cfg.library) > 1:
        raise InputError("identify takes a single --library")
    spec = cfg.library[0] if cfg.library else "poly:3"
    lib = parse_library_spec(spec, obs.d)
    lam = 0.1 if cfg.lam is None else cfg.lam
    method = cfg.method[0] if cfg.method else "isindy"
    model = identify(method, obs, lib, lam, cfg.segments)
    meta = dict(model.meta, method=method, seed=cfg.seed)
    meta.setdefault("rho_per_column", None)
    model = type(model)(model.library, model.xi, model.eta, model.eta_assumed, meta)
    out = _outdir(cfg)
    path = out / "model.json"
    path.write_text(dumps_model(model))
    if list(obs.labels) != [f"x{i + 1}" for i in range(obs.d)]:
        print("# " + ", ".join(f"x{i + 1} = {lab}" for i, lab in enumerate(obs.labels)))
    for line in format_equations(model, obs.grid.t1):
        print(line)
    print(path)
    return EXIT_OK


def _benchmark_plan(cfg: RunConfig):
    system = get_system(cfg.system)
    sine = system.name == "sine"
    libraries = cfg.library or (list(SINE_LIBRARIES) if sine else [system.library_spec])
    ics = cfg.ics or ([(v,) for v in SINE_ICS] if sine else [None])
    windows = cfg.time_range or [None]
    return dict(system=system.name,
                methods=cfg.method or list(METHODS),
                nvr=cfg.nvr or list(system.nvr_levels),
                seeds=cfg.seeds or list(range(1, 21)),
                lam=system.lam if cfg.lam is None else cfg.lam,
                libraries=libraries, windows=windows, ics=ics,
                segments=cfg.segments)


def _plot_results(out: Path, results: Sequence[CellResult], system: str) -> list[Path]:
    from .plotting import plot_trajectories
    from .report import ic_label, window_label

    paths = []
    for r in results:
        if r.plot is None:
            continue
        c = r.cell
        parts = [system, f"nvr{c.nvr:g}"]
        if len({x.cell.library for x in results}) > 1:
            parts.append(c.library.replace(":", "").replace("+", "_"))
        if c.window is not None:
            parts.append("t" + window_label(c.window).replace(":", "-"))
        if c.ic is not None and len({x.cell.ic for x in results}) > 1:
            parts.append("ic" + ic_label(c.ic).replace(";", "_"))
        title = f"{system}, nvr = {c.nvr:.0%}, {c.method}"
        path = out / ("plot_" + "_".join(parts) + ".svg")
        paths.append(plot_trajectories(path, r.plot["times"], r.plot["truth"],
                                       r.plot["identified"], r.plot["observations"],
                                       title=title))
    return paths


def cmd_benchmark(cfg: RunConfig) -> int:
    plan = _benchmark_plan(cfg)
    out = _outdir(cfg)
    cells = build_cells(**plan)
    log.info("benchmark %s: %d cells, %d job(s)", plan["system"], len(cells), cfg.jobs)

    def wants_plot(cell):
        # one figure per noise level (and window/library/ic), first seed, ISINDy
        return cfg.plots and cell.method == "isindy" and cell.key[5] == 0

    results = run_cells(cells, cfg.jobs, wants_plot)
    name = plan["system"]
    paths = [
        write_coefficient_table(out / f"{name}_table.csv", results),
        write_long_coefficients(out / f"{name}_coefficients.csv", results),
        write_support(out / f"{name}_support.csv", results),
        write_summary(out / f"{name}_summary.csv", results),
    ]
    if len(plan["ics"]) > 1:
        paths.append(write_ic_table(out / f"{name}_ic_table.csv", results))
    if cfg.plots:
        paths.extend(_plot_results(out, results, name))
    failed = [r for r in results if not r.ok]
    for p in paths:
        print(p)
    if failed:
        print(f"{len(failed)} of {len(results)} cells failed", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


HANDLERS = {"simulate": cmd_simulate, "smooth": cmd_smooth,
            "identify": cmd_identify, "benchmark": cmd_benchmark}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        cfg = config_from_args(argv)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    logging.basicConfig(level=logging.INFO if cfg.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return HANDLERS[cfg.command](cfg)
    except InputError as exc:
        print(f"error [{exc.stage}]: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except IdentificationError as exc:
        print(f"error [{exc.stage}] {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
