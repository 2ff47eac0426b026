"""Regenerate the data behind the convergence figures.

Writes one summary CSV and one per-replication CSV for each design:

    results/model_free.csv      ratio and weight distance, J in {20, 50}
    results/factor.csv          ratio and weight distance, J in {10, 20}

Plotting is left to the reader; each summary row is one point on a curve.

    python3 scripts/reproduce_figures.py --reps 200
    python3 scripts/reproduce_figures.py --full     # 1000 replications
"""
import argparse
import time
from pathlib import Path

from dsc.simulation import SimulationGrid, run_grid, write_per_rep_csv, write_report_csv

DESIGNS = {
    "model-free": ((20, 50), (50, 100, 200, 400)),
    "factor": ((10, 20), (100, 200, 300, 400)),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=200)
    ap.add_argument("--full", action="store_true")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--design", choices=sorted(DESIGNS), action="append")
    ap.add_argument("--out-dir", default="results")
    args = ap.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    reps = 1000 if args.full else args.reps
    for dgp in args.design or list(DESIGNS):
        J_list, M_list = DESIGNS[dgp]
        grid = SimulationGrid(dgp, J_list, M_list, reps=reps, master_seed=args.seed)
        start = time.perf_counter()
        report = run_grid(grid, threads=args.threads)
        stem = dgp.replace("-", "_")
        write_report_csv(report, out / f"{stem}.csv")
        write_per_rep_csv(report, out / f"{stem}_per_rep.csv")
        print(f"{dgp}: {time.perf_counter() - start:.0f}s")
        for r in report.rows:
            print(f"  J={r.J:3d} M={r.M:4d}  ratio {r.mean_ratio:.5f} ({r.se_ratio:.5f})"
                  f"  wdist {r.mean_wdist:.5f} ({r.se_wdist:.5f})")


if __name__ == "__main__":
    main()
