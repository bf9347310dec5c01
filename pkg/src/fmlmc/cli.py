"""Command line entry point.

``fmlmc run CONFIG [--out DIR] [--seed N] [--full]`` runs a config file.
``fmlmc cost-table`` and ``fmlmc damping`` print a single table as CSV.
``fmlmc plot DIR`` rebuilds the SVG plots of an output directory.

Exit codes: 0 on success, 2 for configuration errors, 3 when a linear solve
fails to converge.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import time

from . import estimators, experiments
from .diffusion import SolverError
from .hartley import damping_curves

log = logging.getLogger("fmlmc")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fmlmc", description="Filtered multilevel Monte Carlo experiments.")
    p.add_argument("-q", "--quiet", action="store_true", help="only report errors")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (overrides FMLMC_OUT and the config)")
    r.add_argument("--seed", type=int, help="root seed (overrides the config)")
    r.add_argument("--full", action="store_true", help="apply the config's full-scale overrides")

    c = sub.add_parser("cost-table", help="normalized simulator costs per level")
    c.add_argument("--dim", type=int, choices=(1, 2), required=True)
    c.add_argument("--filtered", choices=("yes", "no"), required=True)
    c.add_argument("--depth", type=int, help="number of levels listed (default 6 in 1D, 4 in 2D)")

    d = sub.add_parser("damping", help="two-grid damping factors")
    d.add_argument("--n", type=int, default=32, help="fine grid size (even)")

    pl = sub.add_parser("plot", help="rebuild SVG plots from the CSV files of a run")
    pl.add_argument("directory")
    return p


def _write_rows(columns, rows):
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([experiments._num(x) for x in r])


def cmd_run(args) -> int:
    cfg = experiments.load_config(args.config, full=args.full, seed=args.seed)
    out = experiments.resolve_output(cfg, args.out)
    t0 = time.perf_counter()
    experiments.run_experiment(cfg, out, log=log.info)
    log.info("wrote %s in %.1f s", out, time.perf_counter() - t0)
    return EXIT_OK


def cmd_cost_table(args) -> int:
    depth = args.depth or experiments.DEFAULT_COST_DEPTH[args.dim]
    if depth < 1:
        raise experiments.ConfigError("--depth must be at least 1")
    name = "F-MLMC" if args.filtered == "yes" else "MLMC"
    t = estimators.cost_table(estimators.cost_model(args.dim, name), depth)
    rows = [("L" if o == 0 else f"L{o}", c, r) for o, c, r in zip(t["offset"], t["normalized"], t["ratio"])]
    print(f"# {name}, dim={args.dim}, gamma={t['gamma']:.10g}")
    _write_rows(["level", "cost_over_finest", "cost_over_next_coarser"], rows)
    return EXIT_OK


def cmd_damping(args) -> int:
    if args.n < 2 or args.n % 2:
        raise experiments.ConfigError("--n must be an even integer >= 2")
    curves = damping_curves(args.n)
    cols = list(curves)
    _write_rows(cols, zip(*[curves[c] for c in cols]))
    return EXIT_OK


def cmd_plot(args) -> int:
    for path in experiments.render_plots(args.directory):
        log.info("wrote %s", path)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "cost-table": cmd_cost_table, "damping": cmd_damping, "plot": cmd_plot}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s",
                        stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except experiments.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
