"""Command-line front end: ``dsc estimate | simulate | wasserstein | diagnose``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

import numpy as np

from .asymptotics import design_eigen_diagnostic, pretreatment_fit_diagnostics
from .distributions import draw_uniforms
from .estimator import (
    ConvergenceError,
    default_qte_grid,
    fit_dsc,
    qte_curve,
    write_fit_json,
    write_qte_csv,
)
from .panel import DrawMode, EstimationConfig, PanelError, load_panel_csv, min_group_size, resolve_M
from .quantiles import EmpiricalQuantile
from .simulation import (
    SimulationError,
    SimulationGrid,
    run_grid,
    write_per_rep_csv,
    write_report_csv,
)
from .wasserstein import DEFAULT_GRID, w2_empirical_equal_n, w2_grid

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

# eigen_min below this fraction of eigen_max is reported as rank deficiency
EIGEN_WARN_RATIO = 1e-8

SIM_DEFAULTS = {
    "model-free": ((20, 50), (50, 100, 200, 400)),
    "factor": ((10, 20), (100, 200, 300, 400)),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text):
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError(f"expected positive integers, got {text!r}")
    return tuple(vals)


def _seed(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _draw_mode(text):
    try:
        return DrawMode.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _add_data_flags(p):
    p.add_argument("--data", required=True, help="long-format CSV with header unit,time,value")
    p.add_argument("--t0", type=int, required=True, help="last pre-treatment period")
    p.add_argument("--treated", type=int, default=None,
                   help="treated unit id (default: smallest unit id)")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--m", type=int, default=None, help="number of uniform draws")
    g.add_argument("--c", type=float, default=None, help="draws per observation, M = ceil(C n)")
    p.add_argument("--seed", type=_seed, default=None, help="draw seed (default 0)")
    p.add_argument("--lambda", dest="lam", default="uniform",
                   help="'uniform' or comma-separated period weights")
    p.add_argument("--draws", type=_draw_mode, default=DrawMode(), help="iid or ar1(rho)")
    p.add_argument("--out", default=None, help="output path prefix (default: data path stem)")


def build_parser():
    parser = _Parser(prog="dsc", description="Distributional synthetic control toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("estimate", help="fit weights and quantile treatment effects")
    _add_data_flags(p)
    p.add_argument("--qte-grid", type=int, default=99, help="number of QTE levels")

    p = sub.add_parser("diagnose", help="pre-treatment fit and design eigenvalues")
    _add_data_flags(p)

    p = sub.add_parser("simulate", help="Monte Carlo convergence grid")
    p.add_argument("--dgp", choices=sorted(SIM_DEFAULTS), required=True)
    p.add_argument("--j", type=_int_list, default=None)
    p.add_argument("--m", type=_int_list, default=None)
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--full", action="store_true", help="use 1000 replications")
    p.add_argument("--t0", type=int, default=10)
    p.add_argument("--t1", type=int, default=5)
    p.add_argument("--seed", type=_seed, default=None)
    p.add_argument("--grid-size", type=int, default=DEFAULT_GRID)
    p.add_argument("--eval-size", type=int, default=100_000,
                   help="oracle evaluation sample size (factor DGP)")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--per-rep", default=None)

    p = sub.add_parser("wasserstein", help="W2 distance between two samples")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--grid", type=int, default=DEFAULT_GRID)
    return parser


def _announce_seed(seed, out):
    if seed is None:
        print("seed: 0 (default)", file=out)
        return 0
    print(f"seed: {seed}", file=out)
    return seed


def _config(args, seed):
    lam = args.lam
    if lam != "uniform":
        try:
            lam = [float(v) for v in lam.split(",")]
        except ValueError:
            raise UsageError(f"cannot parse --lambda {args.lam!r}")
    try:
        cfg = EstimationConfig(M=args.m, C=args.c if args.c is not None else 1.0,
                               seed=seed, lambdas=lam, draw_mode=args.draws)
    except ValueError as exc:
        raise UsageError(str(exc))
    return cfg


def _prefix(args):
    return Path(args.out) if args.out else Path(args.data).with_suffix("")


def _load(args, cfg):
    panel = load_panel_csv(args.data, args.t0, treated=args.treated)
    if not isinstance(cfg.lambdas, str) and len(cfg.lambdas) != panel.t0:
        raise UsageError(f"--lambda has {len(cfg.lambdas)} entries, expected {panel.t0}")
    return panel


def cmd_estimate(args, out=None):
    out = out or sys.stdout
    seed = _announce_seed(args.seed, out)
    cfg = _config(args, seed)
    panel = _load(args, cfg)
    if args.qte_grid < 1:
        raise UsageError("--qte-grid must be positive")
    fit = fit_dsc(panel, cfg)
    prefix = _prefix(args)
    write_fit_json(fit, f"{prefix}.fit.json")
    grid = default_qte_grid(args.qte_grid)
    write_qte_csv([qte_curve(fit, panel, t, grid) for t in panel.post_periods], f"{prefix}.qte.csv")
    print(f"M: {fit.M}", file=out)
    print("weights:", file=out)
    for u, w in zip(panel.controls, fit.weights):
        print(f"  unit {u}: {w:.6f}", file=out)
    print(f"xi_bar: {pretreatment_fit_diagnostics(fit).xi_bar_hat:.6e}", file=out)
    print(f"wrote {prefix}.fit.json and {prefix}.qte.csv", file=out)
    return EXIT_OK


def cmd_diagnose(args, out=None):
    out = out or sys.stdout
    seed = _announce_seed(args.seed, out)
    cfg = _config(args, seed)
    panel = _load(args, cfg)
    draws = draw_uniforms(resolve_M(cfg, min_group_size(panel)), cfg.draw_mode, cfg.seed)
    fit = fit_dsc(panel, cfg, draws=draws)
    diag = pretreatment_fit_diagnostics(fit)
    prefix = _prefix(args)
    rows = []
    print("t  xi_hat  perfect_fit  eigen_min  eigen_max", file=out)
    for t in fit.periods:
        lo, hi = design_eigen_diagnostic(panel, draws, t)
        flag = diag.perfect_fit[t]
        rows.append([t, repr(diag.xi_hat[t]), int(flag), repr(lo), repr(hi)])
        print(f"{t}  {diag.xi_hat[t]:.6e}  {'PERFECT' if flag else '-'}  {lo:.6e}  {hi:.6e}",
              file=out)
        if lo <= EIGEN_WARN_RATIO * max(hi, 1e-300):
            print(f"warning: period {t}: eigen_min ~ 0, control quantiles are collinear",
                  file=sys.stderr)
    print(f"xi_bar: {diag.xi_bar_hat:.6e}", file=out)
    if all(diag.perfect_fit.values()):
        print("perfect pre-treatment fit in every period", file=out)
    with open(f"{prefix}.diag.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "xi_hat", "perfect_fit", "eigen_min", "eigen_max"])
        w.writerows(rows)
    print(f"wrote {prefix}.diag.csv", file=out)
    return EXIT_OK


def _threads(args):
    if args.threads is not None:
        n = args.threads
    else:
        try:
            n = int(os.environ.get("DSC_THREADS", "1"))
        except ValueError:
            raise UsageError("DSC_THREADS must be an integer")
    if n < 1:
        raise UsageError("thread count must be positive")
    return n


def cmd_simulate(args, out=None):
    out = out or sys.stdout
    seed = _announce_seed(args.seed, out)
    J_list, M_list = SIM_DEFAULTS[args.dgp]
    reps = 1000 if args.full else args.reps
    try:
        grid = SimulationGrid(
            dgp=args.dgp,
            J_list=tuple(args.j or J_list),
            M_list=tuple(args.m or M_list),
            reps=reps,
            T0=args.t0,
            T1=args.t1,
            master_seed=seed,
            oracle_eval_size=args.eval_size,
            grid_size=args.grid_size,
        )
    except ValueError as exc:
        raise UsageError(str(exc))
    report = run_grid(grid, threads=_threads(args))
    write_report_csv(report, args.out)
    if args.per_rep:
        write_per_rep_csv(report, args.per_rep)
    for r in report.rows:
        print(f"{r.dgp} J={r.J} M={r.M}: mean_ratio={r.mean_ratio:.6f} "
              f"mean_wdist={r.mean_wdist:.6f}", file=out)
    print(f"wrote {args.out}", file=out)
    return EXIT_OK


def read_sample_column(path) -> np.ndarray:
    """Single-column numeric CSV; a non-numeric first line is taken as a header."""
    vals = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            cell = text.split(",")[0].strip()
            try:
                vals.append(float(cell))
            except ValueError:
                if lineno == 1:
                    continue
                raise PanelError(f"{path}: line {lineno}: not a number: {cell!r}")
    arr = np.array(vals)
    if arr.size == 0:
        raise PanelError(f"{path}: no values")
    if not np.all(np.isfinite(arr)):
        raise PanelError(f"{path}: non-finite values")
    return arr


def cmd_wasserstein(args, out=None):
    out = out or sys.stdout
    if args.grid < 1:
        raise UsageError("--grid must be positive")
    a = read_sample_column(args.a)
    b = read_sample_column(args.b)
    if a.size == b.size:
        d = w2_empirical_equal_n(a, b)
    else:
        d = w2_grid(EmpiricalQuantile(a), EmpiricalQuantile(b), args.grid)
    print(f"{d:.6f}", file=out)
    return EXIT_OK


COMMANDS = {
    "estimate": cmd_estimate,
    "diagnose": cmd_diagnose,
    "simulate": cmd_simulate,
    "wasserstein": cmd_wasserstein,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"dsc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PanelError, FileNotFoundError) as exc:
        print(f"dsc: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ConvergenceError as exc:
        print(f"dsc: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except SimulationError as exc:
        print(f"dsc: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
