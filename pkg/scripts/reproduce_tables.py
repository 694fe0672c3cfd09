"""Monte-Carlo error tables for the simulation settings.

Example:
    python scripts/reproduce_tables.py --settings I VI X --p 100 --reps 100 --out results/
"""

import argparse
from pathlib import Path

from lassosir.simbench import METHODS, ROMAN, run_benchmark


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--settings", nargs="+", default=list(ROMAN))
    parser.add_argument("--p", nargs="+", type=int, default=[100, 1000])
    parser.add_argument("--rho", nargs="+", type=float, default=[0.5])
    parser.add_argument("--cov", default="ar1", choices=("ar1", "block"))
    parser.add_argument("--methods", nargs="+", default=["lasso-sir", "dt-sir", "matrix-lasso"],
                        choices=METHODS)
    parser.add_argument("--reps", type=int, default=100)
    parser.add_argument("--n", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--out", type=Path, default=Path("results"))
    args = parser.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    for setting in args.settings:
        report = run_benchmark(settings=(setting,), p_grid=args.p,
                               cov_specs=[(args.cov, r) for r in args.rho],
                               methods=args.methods, replications=args.reps, n=args.n,
                               seed=args.seed, n_jobs=args.jobs)
        stem = args.out / f"setting_{setting}_{args.cov}"
        stem.with_suffix(".csv").write_text(report.to_csv())
        stem.with_suffix(".json").write_text(report.to_json())
        print(report.to_table(), flush=True)


if __name__ == "__main__":
    main()
