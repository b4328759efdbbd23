"""Config-driven experiment runner.

Verbs (``python -m lwr_pidl <verb> --config FILE``):

``gen``       write the ring datasets and their manifests
``train``     run every (seed x scenario) cell of the experiment matrix
``baseline``  Lax-Friedrichs reconstruction from complete initial/boundary data
``sweep``     parabolic PIDL over a list of diffusion coefficients
``plotdata``  long-format and snapshot CSVs for the datasets and reconstructions

Exit codes: 0 success, 1 a run failed (rows are still written, flagged
``failed``), 2 bad invocation, config, or input data.

Output layout under the ``out`` directory::

    results.csv        one row per cell, appended, no wall-clock columns
    timings.csv        wall time per cell (the only non-reproducible file)
    cells/<cell>/      recon.csv, trace.csv, manifest.json, params.txt
"""

from __future__ import annotations

import argparse
import csv
import functools
import json
import logging
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np

from . import net, solver
from .config import ConfigParseError, ExperimentConfig, load_config
from .core import (
    ConfigError,
    DensityField,
    DimensionError,
    DomainError,
    FdParams,
    NumericError,
    StabilityError,
    read_field_csv,
    relative_l2,
    write_field_csv,
)
from .sampling import SamplingPlan, ic_bc_nodes
from .train import CostWeights, OptimizerConfig, PhysicsSpec, train_pidl

log = logging.getLogger("lwr_pidl")

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2

RESULT_COLUMNS = (
    "config_digest", "seed", "optimizer", "form", "n_o1", "n_o2",
    "relative_l2", "iterations", "stop_reason", "status",
)
SNAPSHOT_FRACTIONS = (0.0, 0.5, 1.0, 1.5, 2.0, 2.5)  # times t1 / 3


class DataError(ValueError):
    """Input data cannot support the requested run."""


@dataclass(frozen=True)
class ResultRow:
    config_digest: str
    seed: int | str
    optimizer: str
    form: str
    n_o1: int
    n_o2: int
    relative_l2: float
    iterations: int = 0
    stop_reason: str = ""
    status: str = "ok"
    wall_time: float = 0.0  # kept out of results.csv

    def __post_init__(self):
        if not (self.relative_l2 >= 0 or math.isnan(self.relative_l2)):
            raise ValueError("relative_l2 must be non-negative")

    def cells(self) -> list[str]:
        d = asdict(self)
        return [repr(float(d[c])) if c == "relative_l2" else str(d[c]) for c in RESULT_COLUMNS]


# --- data -------------------------------------------------------------------------


def ingest_grid(path, fd: FdParams) -> DensityField:
    """Read an external density grid.

    Blank or ``nan`` cells are missing data and pass through as NaN. Infinite
    cells are rejected. Densities outside ``[0, rho_m]`` only warn, since
    measured data can exceed a nominal jam density.
    """
    field = read_field_csv(path)
    v = field.values
    if np.any(np.isinf(v)):
        raise DomainError(f"{path}: infinite density values")
    missing = int(np.count_nonzero(np.isnan(v)))
    if missing:
        warnings.warn(f"{path}: {missing} missing cells", stacklevel=2)
    bad = int(np.count_nonzero((v < 0) | (v > fd.rho_m)))
    if bad:
        warnings.warn(f"{path}: {bad} cells outside [0, rho_m={fd.rho_m}]", stacklevel=2)
    return field


def _fd(cfg: ExperimentConfig, form: str) -> FdParams:
    eps = 0.0
    if form == "parabolic":
        if cfg.epsilon is not None:
            eps = cfg.epsilon
        elif cfg.source == "ring":
            eps = solver.RING_EPSILONS[cfg.profile]
        else:
            raise ConfigParseError("parabolic form on csv data needs [physics] epsilon")
    return FdParams(cfg.v_f, cfg.rho_m, eps)


def load_dataset(cfg: ExperimentConfig, form: str) -> tuple[DensityField, bool]:
    """``(ground truth, periodic)`` for one physics form."""
    if cfg.source == "csv":
        if not os.path.exists(cfg.path):
            raise ConfigParseError(f"dataset path does not exist: {cfg.path}")
        return ingest_grid(cfg.path, _fd(cfg, form)), False
    if (cfg.v_f, cfg.rho_m) != (1.0, 1.0):
        raise ConfigParseError("the ring preset is normalised: v_f = rho_m = 1")
    return _ring_field(_fd(cfg, form).epsilon, cfg.profile), True


@functools.lru_cache(maxsize=8)
def _ring_field(epsilon: float, profile: str) -> DensityField:
    return solver.solve(solver.ring_config(epsilon, profile))


# --- output helpers -------------------------------------------------------------


def _append_rows(path, rows: list[list[str]], header) -> None:
    new = not os.path.exists(path)
    with open(path, "a", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if new:
            w.writerow(header)
        w.writerows(rows)


def _write_json(path, obj) -> None:
    with open(path, "w", encoding="ascii") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def emit_heatmap_data(field: DensityField, out_path, times=None) -> list[str]:
    """Long-format ``x,t,rho`` CSV plus one ``x,rho`` snapshot per time.

    Snapshots land next to ``out_path`` as ``<stem>_t<time>.csv`` and use the
    grid row nearest each time. Default times are ``(0, .5, 1, 1.5, 2, 2.5) * t1/3``.
    Returns every path written.
    """
    g = field.grid
    out_path = os.fspath(out_path)
    if times is None:
        times = [f * g.t1 / 3.0 for f in SNAPSHOT_FRACTIONS]
    X, T = g.mesh()
    written = [out_path]
    with open(out_path, "w", encoding="ascii") as fh:
        fh.write("x,t,rho\n")
        for a, b, c in zip(X.ravel(), T.ravel(), field.values.ravel()):
            fh.write(f"{float(a)!r},{float(b)!r},{float(c)!r}\n")
    stem = os.path.splitext(out_path)[0]
    xs = g.xs()
    for t in times:
        n = int(np.clip(round((t - g.t0) / g.dt), 0, g.nt))
        p = f"{stem}_t{t:g}.csv"
        with open(p, "w", encoding="ascii") as fh:
            fh.write(f"# t={float(g.ts()[n])!r}\nx,rho\n")
            for a, c in zip(xs, field.values[n]):
                fh.write(f"{float(a)!r},{float(c)!r}\n")
        written.append(p)
    return written


# --- experiment cells ------------------------------------------------------------


@dataclass(frozen=True)
class Cell:
    seed: int
    form: str
    optimizer: str
    ic_bc_fraction: float
    cv_points: int

    @property
    def name(self) -> str:
        return f"{self.form}-{self.optimizer}-f{self.ic_bc_fraction:g}-cv{self.cv_points}-s{self.seed}"


def experiment_cells(cfg: ExperimentConfig) -> list[Cell]:
    return [
        Cell(s, form, opt, fr, cvp)
        for s in cfg.seeds
        for fr in cfg.ic_bc_fractions
        for cvp in cfg.cv_points
        for opt in cfg.optimizers
        for form in cfg.forms
    ]


def _optimizer(cfg: ExperimentConfig, name: str) -> OptimizerConfig:
    return OptimizerConfig(name=name, lr=cfg.lr, iters=cfg.iters, beta1=cfg.beta1, beta2=cfg.beta2,
                           eps_hat=cfg.eps_hat, memory=cfg.memory, max_iters=cfg.max_iters, ftol=cfg.ftol)


def run_cell(cfg: ExperimentConfig, cell: Cell, out_dir, truth: DensityField | None = None,
             periodic: bool = True, fd: FdParams | None = None) -> ResultRow:
    """Train one cell and write its artifacts; training failures become a ``failed`` row."""
    if truth is None:
        truth, periodic = load_dataset(cfg, cell.form)
    fd = fd or _fd(cfg, cell.form)
    plan = SamplingPlan(ic_bc_fraction=cell.ic_bc_fraction, eulerian_positions=cfg.eulerian_positions,
                        eulerian_dropout=cfg.eulerian_dropout, cv_count=cfg.cv_count if cell.cv_points else 0,
                        cv_points=cell.cv_points, seed=cell.seed)
    spec = PhysicsSpec(fd, cell.form)
    cdir = os.path.join(out_dir, "cells", cell.name)
    os.makedirs(cdir, exist_ok=True)
    digest = cfg.digest
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            report, recon, setup = train_pidl(
                truth, plan, spec, CostWeights(cfg.mu1, cfg.mu2), _optimizer(cfg, cell.optimizer),
                seed=cell.seed, hidden=cfg.hidden, n_collocation=cfg.n_collocation,
                periodic=periodic, return_setup=True)
    except (NumericError, StabilityError, FloatingPointError) as exc:
        log.error("cell %s aborted: %s", cell.name, exc)
        return ResultRow(digest, cell.seed, cell.optimizer, cell.form, 0, 0, math.nan, 0, str(exc), "failed")
    n_o1, n_o2 = _observation_split(truth, setup.observations)
    ok = recon.is_finite() and not report.reason.startswith("non-finite")
    err = relative_l2(_complete(truth), recon) if ok else math.nan
    write_field_csv(recon, os.path.join(cdir, "recon.csv"))
    report.write_trace(os.path.join(cdir, "trace.csv"))
    net.save_params(net.MlpParams(setup.shape, report.theta), os.path.join(cdir, "params.txt"))
    _write_json(os.path.join(cdir, "manifest.json"), {
        "cell": asdict(cell), "config_digest": digest, "physics": {"form": cell.form, **asdict(fd)},
        "hidden": list(cfg.hidden), "n_params": setup.shape.n_params, "n_collocation": cfg.n_collocation,
        "mu1": cfg.mu1, "mu2": cfg.mu2, "optimizer": asdict(_optimizer(cfg, cell.optimizer)),
        "n_observations": len(setup.observations), "iterations": report.iterations,
        "evaluations": report.evaluations, "stop_reason": report.reason,
        "final_cost": report.final_cost, "relative_l2": err,
    })
    return ResultRow(digest, cell.seed, cell.optimizer, cell.form, n_o1, n_o2, err,
                     report.iterations, report.reason, "ok" if ok else "failed", report.wall_time)


def _complete(truth: DensityField) -> DensityField:
    if truth.is_finite():
        return truth
    raise DataError("cannot score against a ground truth with missing cells")


def _observation_split(truth: DensityField, obs) -> tuple[int, int]:
    """Counts of observations on the initial/boundary nodes vs the interior."""
    g = truth.grid
    edge = 0
    for o in obs:
        on_t0 = abs(o.t - g.t0) <= 1e-12 * max(1.0, abs(g.t1))
        on_x = min(abs(o.x - g.x0), abs(o.x - g.x1)) <= 1e-12 * max(1.0, abs(g.x1))
        edge += on_t0 or on_x
    return edge, len(obs) - edge


def _cell_job(args):
    cfg, cell, out_dir = args
    return run_cell(cfg, cell, out_dir)


def _run_cells(cfg, cells, out_dir, jobs: int) -> list[ResultRow]:
    work = [(cfg, c, out_dir) for c in cells]
    if jobs <= 1 or len(work) <= 1:
        rows = []
        for w in work:
            log.info("cell %s", w[1].name)
            rows.append(_cell_job(w))
        return rows
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_cell_job, work))  # input order, so output is deterministic


def _record(out_dir, rows: list[ResultRow], cells_named: list[str]) -> None:
    _append_rows(os.path.join(out_dir, "results.csv"), [r.cells() for r in rows], RESULT_COLUMNS)
    _append_rows(os.path.join(out_dir, "timings.csv"),
                 [[n, r.config_digest, str(r.seed), repr(r.wall_time)] for n, r in zip(cells_named, rows)],
                 ("cell", "config_digest", "seed", "wall_time_s"))


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> tuple[list[ResultRow], int]:
    """Run every cell, append the rows, return ``(rows, exit code)``."""
    os.makedirs(cfg.out, exist_ok=True)
    for form in set(cfg.forms):
        load_dataset(cfg, form)  # fail fast on bad data before any training
    cells = experiment_cells(cfg)
    rows = _run_cells(cfg, cells, cfg.out, jobs)
    _record(cfg.out, rows, [c.name for c in cells])
    failed = sum(r.status != "ok" for r in rows)
    return rows, EXIT_FAILED if failed else EXIT_OK


# --- baseline, sweep, gen, plotdata ----------------------------------------------


def baseline_reconstruction(truth: DensityField, fd: FdParams) -> DensityField:
    """Lax-Friedrichs re-solve from the truth's initial row and boundary columns."""
    g = truth.grid
    v = truth.values
    for name, series, where in (("initial row", v[0], f"t={g.t0!r}"),
                                ("left boundary column", v[:, 0], f"x={g.x0!r}"),
                                ("right boundary column", v[:, -1], f"x={g.x1!r}")):
        missing = int(np.count_nonzero(~np.isfinite(series)))
        if missing:
            raise DataError(f"{name} ({where}) has {missing} missing values; "
                            "the baseline needs complete initial and boundary data")
    # measured data may exceed rho_m; the scheme needs densities in range
    clip = lambda s: np.clip(s, 0.0, fd.rho_m)  # noqa: E731
    return solver.reconstruct_lax_friedrichs(clip(v[0]), clip(v[:, 0]), clip(v[:, -1]), g, fd)


def run_baseline(cfg: ExperimentConfig) -> tuple[list[ResultRow], int]:
    os.makedirs(cfg.out, exist_ok=True)
    rows = []
    for form in cfg.forms:
        truth, _ = load_dataset(cfg, form)
        fd = _fd(cfg, form)
        recon = baseline_reconstruction(truth, fd)
        err = relative_l2(_complete(truth), recon)
        cdir = os.path.join(cfg.out, "cells", f"{form}-lax-friedrichs")
        os.makedirs(cdir, exist_ok=True)
        write_field_csv(recon, os.path.join(cdir, "recon.csv"))
        n_edge = len(ic_bc_nodes(truth))
        rows.append(ResultRow(cfg.digest, "-", "lax-friedrichs", form, n_edge, 0, err, truth.grid.nt, "complete"))
        log.info("baseline %s: relative L2 %.4g", form, err)
    _append_rows(os.path.join(cfg.out, "results.csv"), [r.cells() for r in rows], RESULT_COLUMNS)
    return rows, EXIT_OK


def sweep_epsilons(values) -> list[float]:
    """Sorted, de-duplicated epsilon list (warns on duplicates)."""
    vals = [float(v) for v in values]
    uniq = sorted(set(vals))
    if len(uniq) != len(vals):
        warnings.warn(f"duplicate epsilon values dropped: {sorted(vals)} -> {uniq}", stacklevel=2)
    if any(v <= 0 for v in uniq):
        raise ConfigParseError("sweep epsilons must be positive")
    return uniq


def diffusion_sweep(cfg: ExperimentConfig, jobs: int = 1) -> tuple[list[tuple[float, float]], int]:
    """Parabolic PIDL per epsilon against one fixed ground truth.

    The truth is the csv grid, or the hyperbolic ring dataset. Writes
    ``sweep.csv`` (``epsilon,relative_l2``, median over seeds).
    """
    eps_list = sweep_epsilons(cfg.epsilons or ([cfg.epsilon] if cfg.epsilon else []))
    if not eps_list:
        raise ConfigParseError("sweep needs [physics] epsilons")
    os.makedirs(cfg.out, exist_ok=True)
    truth, periodic = load_dataset(cfg, "hyperbolic")
    table, status = [], EXIT_OK
    for eps in eps_list:
        sub = replace(cfg, epsilon=eps, forms=("parabolic",))
        cells = experiment_cells(sub)
        sub_out = os.path.join(cfg.out, f"eps{eps:g}")
        rows = [run_cell(sub, c, sub_out, truth, periodic) for c in cells]
        _record(cfg.out, rows, [f"eps{eps:g}/{c.name}" for c in cells])
        errs = [r.relative_l2 for r in rows if r.status == "ok"]
        if len(errs) != len(rows):
            status = EXIT_FAILED
        table.append((eps, float(np.median(errs)) if errs else math.nan))
    _append_rows(os.path.join(cfg.out, "sweep.csv"), [[repr(e), repr(v)] for e, v in table],
                 ("epsilon", "relative_l2"))
    return table, status


def generate_datasets(cfg: ExperimentConfig) -> list[str]:
    if cfg.source != "ring":
        raise ConfigParseError("gen only builds the ring datasets (source = ring)")
    os.makedirs(cfg.out, exist_ok=True)
    paths = []
    for form in cfg.forms:
        field, _ = load_dataset(cfg, form)
        fd = _fd(cfg, form)
        p = os.path.join(cfg.out, f"ring_{form}.csv")
        write_field_csv(field, p)
        sc = solver.SolveConfig(field.grid, fd, solver.Periodic(), field.values[0])
        _write_json(os.path.join(cfg.out, f"ring_{form}.json"), solver.preset_manifest(sc, cfg.profile))
        paths.append(p)
    return paths


def plot_data(cfg: ExperimentConfig) -> list[str]:
    """Heat-map CSVs for each dataset form and every reconstruction under ``out/cells``."""
    pdir = os.path.join(cfg.out, "plot")
    os.makedirs(pdir, exist_ok=True)
    written = []
    for form in cfg.forms:
        field, _ = load_dataset(cfg, form)
        written += emit_heatmap_data(field, os.path.join(pdir, f"data_{form}.csv"), cfg.snapshot_times)
    cells = os.path.join(cfg.out, "cells")
    if os.path.isdir(cells):
        for name in sorted(os.listdir(cells)):
            rp = os.path.join(cells, name, "recon.csv")
            if os.path.exists(rp):
                written += emit_heatmap_data(read_field_csv(rp), os.path.join(pdir, f"{name}.csv"),
                                             cfg.snapshot_times)
    return written


# --- entry point -------------------------------------------------------------------


def _seed_list(text: str) -> tuple[int, ...]:
    try:
        seeds = tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must be comma-separated integers, got {text!r}") from None
    if not seeds:
        raise argparse.ArgumentTypeError("seed list is empty")
    return seeds


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="python -m lwr_pidl", description=__doc__.split("\n")[0])
    p.add_argument("verb", choices=("gen", "train", "baseline", "sweep", "plotdata"))
    p.add_argument("--config", required=True, help="experiment config file")
    p.add_argument("--out", help="output directory (overrides [run] out)")
    p.add_argument("--seeds", type=_seed_list, help="comma-separated seeds (overrides [run] seeds)")
    p.add_argument("--jobs", type=int, default=1, help="parallel training cells")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = load_config(args.config)
        if args.out:
            cfg.out = args.out
        if args.seeds:
            cfg.seeds = args.seeds
        if args.verb == "gen":
            for p in generate_datasets(cfg):
                print(p)
            return EXIT_OK
        if args.verb == "train":
            rows, code = run_experiment(cfg, args.jobs)
        elif args.verb == "baseline":
            rows, code = run_baseline(cfg)
        elif args.verb == "sweep":
            table, code = diffusion_sweep(cfg, args.jobs)
            for eps, err in table:
                print(f"{eps:g}\t{err:.6g}")
            return code
        else:
            print(f"{len(plot_data(cfg))} files written under {os.path.join(cfg.out, 'plot')}")
            return EXIT_OK
    except (ConfigError, DataError, DimensionError, DomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for r in rows:
        print(f"{r.form:10s} {r.optimizer:14s} seed={r.seed} n_o1={r.n_o1} n_o2={r.n_o2} "
              f"rel_l2={r.relative_l2:.4g} {r.status}")
    return code
