"""Command line entry point.

    lossfluid simulate CONFIG   event logs and mesh summaries per (n, seed)
    lossfluid fluid CONFIG      fluid solution and regime table
    lossfluid compare CONFIG    error table, overlays, residual-bound tables
    lossfluid blocked CONFIG    blocked-arrival and congestion-ratio series
"""
from __future__ import annotations

import argparse
import json
import logging
import platform
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import export
from .config import RunConfig, parse_config
from .errors import LossFluidError
from .fluid import regimes, solve, solve_mollified
from .harness import ERROR_COLUMNS, RESIDUAL_COLUMNS, convergence_experiment, residual_moment_check
from .observables import OVERLAY_COLUMNS, align
from .simulator import simulate

log = logging.getLogger("lossfluid")


def _mesh(cfg: RunConfig):
    return solve(cfg.model, cfg.h).times


def _seeds(cfg: RunConfig):
    return [cfg.base_seed + i for i in range(cfg.reps)]


def cmd_simulate(cfg: RunConfig, out: Path, plot: bool) -> list:
    mesh = _mesh(cfg)
    written = []
    for n in cfg.n_list:
        model = cfg.model.with_capacity(n)
        for seed in _seeds(cfg):
            path = simulate(model, seed)
            tag = f"n{n}_seed{seed}"
            written.append(export.write_csv(out / f"events_{tag}.csv", export.EVENT_COLUMNS, export.event_rows(path)))
            written.append(export.write_csv(out / f"path_{tag}.csv", export.PATH_COLUMNS, export.path_rows(path, mesh)))
            if plot:
                written.append(export.write_columns(out / f"rho_{tag}.dat", mesh, path.occupancy_at(mesh)))
    return written


def cmd_fluid(cfg: RunConfig, out: Path, plot: bool) -> list:
    sol = solve(cfg.model, cfg.h)
    reg = regimes(sol, cfg.tol_pin)
    written = [
        export.write_csv(out / "solution.csv", export.SOLUTION_COLUMNS, export.solution_rows(sol)),
        export.write_csv(out / "regimes.csv", export.REGIME_COLUMNS, export.regime_rows(reg)),
    ]
    if plot:
        written.append(export.write_columns(out / "rho.dat", sol.times, sol.rho))
    if cfg.mollifier is not None:
        msol = solve_mollified(cfg.model, cfg.h, cfg.mollifier)
        written.append(
            export.write_csv(out / "solution_mollified.csv", export.SOLUTION_COLUMNS, export.solution_rows(msol))
        )
        if plot:
            written.append(export.write_columns(out / "rho_mollified.dat", msol.times, msol.rho))
    return written


def cmd_compare(cfg: RunConfig, out: Path, plot: bool) -> list:
    sol = solve(cfg.model, cfg.h)
    table = convergence_experiment(
        cfg.model, cfg.n_list, cfg.reps, cfg.base_seed, sol=sol,
        workers=cfg.workers, residual_points=cfg.residual_points,
    )
    written = [
        export.write_csv(out / "error_table.csv", ERROR_COLUMNS, table.rows),
        export.write_csv(out / "error_summary.csv", export.SUMMARY_COLUMNS, table.summary()),
    ]
    for n in cfg.n_list:
        path = simulate(cfg.model.with_capacity(n), cfg.base_seed)
        overlay = align(path, sol, sol.times)
        written.append(export.write_csv(out / f"overlay_n{n}.csv", OVERLAY_COLUMNS, overlay.rows()))
        if plot:
            written.append(export.write_columns(out / f"rho_n{n}.dat", overlay.time, overlay.rho_n))
        if cfg.model.r0 == 0:
            res = residual_moment_check(
                cfg.model, n, cfg.residual_reps, cfg.base_seed,
                points=cfg.residual_points, workers=cfg.workers,
            )
            written.append(export.write_csv(out / f"residual_n{n}.csv", RESIDUAL_COLUMNS, res.rows()))
    if plot:
        written.append(export.write_columns(out / "rho.dat", sol.times, sol.rho))
    for n, metric, med, q1, q3 in table.summary():
        print(f"n={n:<6d} {metric:<28s} median={med:.4g}  IQR=[{q1:.4g}, {q3:.4g}]")
    return written


def cmd_blocked(cfg: RunConfig, out: Path, plot: bool) -> list:
    sol = solve(cfg.model, cfg.h)
    mesh = sol.times
    written = [export.write_csv(out / "fluid_blocked.csv", export.FLUID_BLOCKED_COLUMNS, export.fluid_blocked_rows(sol))]
    if plot:
        written.append(export.write_columns(out / "b.dat", mesh, sol.blocked(mesh)))
    for n in cfg.n_list:
        model = cfg.model.with_capacity(n)
        for seed in _seeds(cfg):
            path = simulate(model, seed)
            tag = f"n{n}_seed{seed}"
            written.append(
                export.write_csv(out / f"blocked_{tag}.csv", export.SIM_BLOCKED_COLUMNS, export.sim_blocked_rows(path, mesh))
            )
            if plot:
                written.append(export.write_columns(out / f"b_{tag}.dat", mesh, path.blocked_fraction(mesh)))
    return written


COMMANDS = {
    "simulate": cmd_simulate,
    "fluid": cmd_fluid,
    "compare": cmd_compare,
    "blocked": cmd_blocked,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lossfluid", description=__doc__.splitlines()[0] if __doc__ else None)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("config", type=Path, help="YAML run configuration")
        p.add_argument("-o", "--output-dir", type=Path, help="overrides output.directory and $LOSSFLUID_OUTPUT_DIR")
        p.add_argument("--reps", type=int, help="override experiment.reps")
        p.add_argument("--seed", type=int, help="override experiment.base_seed")
        p.add_argument("--workers", type=int, help="parallel replication workers")
        p.add_argument("--emit-plot-data", action="store_true", help="also write two-column gnuplot files")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _write_metadata(cfg: RunConfig, out: Path, command: str, files: list):
    meta = {
        "command": command,
        "config": str(cfg.source),
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "lossfluid": __version__,
        "numpy": np.__version__,
        "python": platform.python_version(),
        "files": sorted(str(Path(f).relative_to(out)) for f in files),
    }
    (out / "run.json").write_text(json.dumps(meta, indent=2) + "\n")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = parse_config(args.config)
        if args.output_dir is not None:
            cfg.output_dir = args.output_dir
        if args.reps is not None:
            cfg.reps = args.reps
        if args.seed is not None:
            cfg.base_seed = args.seed
        if args.workers is not None:
            cfg.workers = args.workers
        out = cfg.output_dir
        out.mkdir(parents=True, exist_ok=True)
        files = COMMANDS[args.command](cfg, out, args.emit_plot_data)
        _write_metadata(cfg, out, args.command, files)
    except LossFluidError as exc:
        print(f"lossfluid {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"lossfluid {args.command}: error: {exc}", file=sys.stderr)
        return 1
    log.info("wrote %d files to %s", len(files), out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
