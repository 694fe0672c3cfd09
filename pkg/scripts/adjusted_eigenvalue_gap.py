"""Adjusted eigenvalues of the d = H fit, replication by replication.

Prints, for each replication, the leading adjusted eigenvalues, the estimated
number of directions and the ratio between the smallest signal value and the
largest noise value.
"""

import argparse

import numpy as np

from lassosir.estimators import lasso_sir
from lassosir.simbench import Cell, covariance_for, get_setting, replication_seed, sample_dataset


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--setting", default="I")
    parser.add_argument("--p", type=int, default=100)
    parser.add_argument("--n", type=int, default=1000)
    parser.add_argument("--rho", type=float, default=0.0)
    parser.add_argument("--reps", type=int, default=20)
    parser.add_argument("--seed", type=int, default=1)
    args = parser.parse_args()

    setting = get_setting(args.setting)
    cell = Cell(setting.id, args.p, "ar1", args.rho)
    cov = covariance_for(setting, "ar1", args.p, args.rho)
    d = setting.d_true
    ratios = []
    for rep in range(args.reps):
        data_seq, cv_seq = replication_seed(args.seed, cell, rep).spawn(2)
        data = sample_dataset(setting, cov, args.n, data_seq)
        est = lasso_sir(data.X, data.y, seed=int(cv_seq.generate_state(1)[0]))
        adj = est.candidate_adjusted_eigenvalues
        ratio = adj[:d].min() / max(adj[d:].max(), np.finfo(float).tiny)
        ratios.append(ratio)
        head = " ".join(f"{a:.4f}" for a in adj[:d + 3])
        print(f"rep {rep:3d}  d_hat {est.d_used}  ratio {ratio:8.2f}  [{head} ...]")
    print(f"min ratio {min(ratios):.3f}  median {np.median(ratios):.3f}")


if __name__ == "__main__":
    main()
