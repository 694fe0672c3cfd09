"""Command-line front end.

Subcommands: ``fit``, ``estimate-d``, ``simulate``, ``benchmark``, ``distance``.
Any subcommand accepts ``--config FILE`` holding ``key = value`` lines whose
keys are long option names (``slices = 20``, ``quantile-normalize = true``);
options given on the command line win.
"""

import argparse
import json
import logging
import secrets
import sys
from pathlib import Path

import numpy as np

from .data import load_csv, quantile_normalize, read_matrix, write_csv, write_matrix
from .estimators import dt_sir, estimate_d, lasso_sir, matrix_lasso
from .exceptions import (
    DataFormatError,
    DegenerateSpectrumError,
    EmptyPathError,
    SingularCovarianceError,
)
from .linalg import projection_distance
from .simbench import METHODS, ROMAN, covariance_for, get_setting, run_benchmark, sample_dataset

log = logging.getLogger("lassosir")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

FIT_METHODS = ("lasso-sir", "dt-sir", "matrix-lasso")


class UsageError(Exception):
    pass


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _data_options(p):
    p.add_argument("--input", required=True, help="CSV file, one sample per row")
    p.add_argument("--response", required=True,
                   help="response column name, or 0-based index with --no-header")
    p.add_argument("--no-header", dest="header", action="store_false")
    p.add_argument("--quantile-normalize", action="store_true",
                   help="replace each covariate by its normal scores")
    p.add_argument("--slices", type=_positive_int, default=20)
    p.add_argument("--discrete", action="store_true",
                   help="one slice per response level; d defaults to levels - 1")
    p.add_argument("--folds", type=_positive_int, default=10)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--mu-theory", type=float, default=None, metavar="C",
                   help="penalty C*sqrt(log p/(n lam_i)) instead of cross-validation")


def build_parser():
    parser = argparse.ArgumentParser(prog="lassosir", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value option file")
    common.add_argument("--dump-config", help="write the resolved options to this file")

    fit = sub.add_parser("fit", parents=[common], help="estimate the central space")
    _data_options(fit)
    fit.add_argument("--directions", type=_positive_int, default=None,
                     help="number of directions d (estimated when omitted)")
    fit.add_argument("--method", choices=FIT_METHODS, default="lasso-sir")
    fit.add_argument("--screen-size", type=_positive_int, default=None)
    fit.add_argument("--output", help="output file (stdout when omitted)")
    fit.add_argument("--format", choices=("json", "csv"), default="json")

    est = sub.add_parser("estimate-d", parents=[common], help="estimate the number of directions")
    _data_options(est)
    est.add_argument("--output")

    sim = sub.add_parser("simulate", parents=[common], help="write a simulated data set")
    sim.add_argument("--setting", required=True, choices=ROMAN + tuple(s.lower() for s in ROMAN))
    sim.add_argument("--p", type=_positive_int, default=100)
    sim.add_argument("--n", type=_positive_int, default=1000)
    sim.add_argument("--cov", choices=("ar1", "block"), default="ar1")
    sim.add_argument("--rho", type=float, default=0.5)
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--output", required=True)
    sim.add_argument("--truth-output", help="CSV for the true coefficient matrix")

    bench = sub.add_parser("benchmark", parents=[common], help="Monte-Carlo error table")
    bench.add_argument("--setting", nargs="+", default=["I"])
    bench.add_argument("--p", nargs="+", type=_positive_int, default=[100, 1000])
    bench.add_argument("--rho", nargs="+", type=float, default=[0.5])
    bench.add_argument("--cov", choices=("ar1", "block"), default="ar1")
    bench.add_argument("--method", nargs="+", choices=METHODS, default=["lasso-sir"])
    bench.add_argument("--reps", type=_positive_int, default=100)
    bench.add_argument("--n", type=_positive_int, default=1000)
    bench.add_argument("--slices", type=_positive_int, default=20)
    bench.add_argument("--folds", type=_positive_int, default=10)
    bench.add_argument("--seed", type=int, default=None)
    bench.add_argument("--jobs", type=int, default=1)
    bench.add_argument("--timing", action="store_true",
                       help="record run times (makes reports non-reproducible)")
    bench.add_argument("--output")
    bench.add_argument("--format", choices=("json", "csv"), default="csv")

    dist = sub.add_parser("distance", parents=[common],
                          help="projection distance between two basis files")
    dist.add_argument("first")
    dist.add_argument("second")
    return parser


def read_config(path):
    """Parse ``key = value`` lines into argv tokens."""
    tokens = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        flag = "--" + key.replace("_", "-")
        low = value.lower()
        if low in ("true", "yes", "on"):
            if key.replace("_", "-") != "header":
                tokens.append(flag)
        elif low in ("false", "no", "off"):
            if key.replace("_", "-") == "header":
                tokens.append("--no-header")
        else:
            tokens.append(flag)
            tokens.extend(value.replace(",", " ").split())
    return tokens


def _resolved(args):
    skip = {"config", "dump_config", "verbose", "command"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def dump_config(args, path):
    lines = []
    for key, value in _resolved(args).items():
        if value is None or key in ("first", "second"):
            continue
        name = key.replace("_", "-")
        if isinstance(value, bool):
            if name == "header":
                value = "true" if value else "false"
            elif not value:
                continue
            else:
                value = "true"
        elif isinstance(value, (list, tuple)):
            value = " ".join(str(v) for v in value)
        lines.append(f"{name} = {value}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _load(args):
    data = load_csv(args.input, args.response, header=args.header)
    X = data.X
    if args.quantile_normalize:
        X = quantile_normalize(X, names=data.names)
    return X, data


def _as_list(a):
    return np.asarray(a, dtype=float).tolist()


def _fit_payload(est, data, args):
    return {
        "method": est.method,
        "n": int(data.X.shape[1]),
        "p": int(data.X.shape[0]),
        "slices": args.slices,
        "response": data.response_name,
        "d": int(est.d_used),
        "d_hat": int(est.d_used) if est.d_estimated else None,
        "d_estimated": bool(est.d_estimated),
        "eigenvalues": _as_list(est.eigenvalues),
        "adjusted_eigenvalues": _as_list(est.adjusted_eigenvalues),
        "candidate_adjusted_eigenvalues": (None if est.candidate_adjusted_eigenvalues is None
                                           else _as_list(est.candidate_adjusted_eigenvalues)),
        "mu": [float(m) for m in est.mu_used],
        "selected": None if est.selected is None else [data.names[i] for i in est.selected],
        "variables": list(data.names),
        "B_hat": _as_list(est.B_hat),
        "basis": _as_list(est.basis),
        # output paths do not affect the estimate and would spoil byte-identical reruns
        "config": {k: v for k, v in _resolved(args).items() if k != "output"},
    }


def command_fit(args):
    X, data = _load(args)
    H = None if args.discrete else args.slices
    if args.discrete:
        args.slices = int(np.unique(data.y).size)
    if args.method == "lasso-sir":
        est = lasso_sir(X, data.y, H=H, d=args.directions, discrete=args.discrete,
                        cv_folds=args.folds, seed=args.seed, mu_theory=args.mu_theory)
    else:
        d = args.directions
        d_estimated = False
        if d is None:
            d = (args.slices - 1 if args.discrete else
                 estimate_d(X, data.y, H=H, cv_folds=args.folds, seed=args.seed,
                            mu_theory=args.mu_theory))
            d_estimated = not args.discrete
        if args.method == "dt-sir":
            est = dt_sir(X, data.y, H=H, d=d, screen_size=args.screen_size,
                         discrete=args.discrete)
        else:
            est = matrix_lasso(X, data.y, H=H, d=d, cv_folds=args.folds, seed=args.seed,
                               discrete=args.discrete)
        est.d_estimated = d_estimated
    payload = _fit_payload(est, data, args)
    if args.format == "json" or not args.output:
        text = json.dumps(payload, indent=2) + "\n"
        if args.output:
            Path(args.output).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
        return EXIT_OK
    out = Path(args.output)
    write_matrix(out, est.basis, data.names)
    write_matrix(out.with_suffix(".B_hat.csv"), est.B_hat, data.names)
    with open(out.with_suffix(".directions.csv"), "w", encoding="utf-8") as fh:
        fh.write("direction,eigenvalue,adjusted_eigenvalue,mu,d_hat\n")
        d_hat = payload["d_hat"] if payload["d_hat"] is not None else ""
        mus = [repr(float(m)) for m in est.mu_used] or [""] * est.d_used
        for i in range(est.d_used):
            fh.write(f"{i + 1},{float(est.eigenvalues[i])!r},"
                     f"{float(est.adjusted_eigenvalues[i])!r},{mus[i]},{d_hat}\n")
    return EXIT_OK


def command_estimate_d(args):
    X, data = _load(args)
    H = None if args.discrete else args.slices
    d = estimate_d(X, data.y, H=H, cv_folds=args.folds, seed=args.seed,
                   discrete=args.discrete, mu_theory=args.mu_theory)
    config = {k: v for k, v in _resolved(args).items() if k != "output"}
    text = json.dumps({"d_hat": int(d), "config": config}, indent=2) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    print(d)
    return EXIT_OK


def command_simulate(args):
    setting = get_setting(args.setting)
    cov = covariance_for(setting, args.cov, args.p, args.rho)
    data = sample_dataset(setting, cov, args.n, args.seed)
    write_csv(args.output, data.X, data.y)
    if args.truth_output:
        write_matrix(args.truth_output, data.B_true)
    log.info("wrote %d samples of setting %s to %s", args.n, setting.id, args.output)
    return EXIT_OK


def command_benchmark(args):
    for s in args.setting:
        get_setting(s)
    report = run_benchmark(
        settings=[get_setting(s).id for s in args.setting],
        p_grid=args.p,
        cov_specs=[(args.cov, r) for r in args.rho],
        methods=args.method,
        replications=args.reps,
        n=args.n,
        H=args.slices,
        seed=args.seed,
        cv_folds=args.folds,
        n_jobs=args.jobs,
        record_timing=args.timing,
    )
    text = report.to_json() if args.format == "json" else report.to_csv()
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    sys.stdout.write(report.to_table())
    for err in report.errors:
        log.warning("replication failed: %s", err)
    return EXIT_OK


def _read_basis(path):
    if str(path).endswith(".json"):
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        B = np.asarray(payload["basis"], dtype=float)
        if B.ndim == 1:
            B = B.reshape(-1, 1) if B.size else np.zeros((len(payload["variables"]), 0))
        return B
    return read_matrix(path)


def command_distance(args):
    A, B = _read_basis(args.first), _read_basis(args.second)
    if A.shape[0] != B.shape[0]:
        raise UsageError(f"bases have different dimensions ({A.shape[0]} vs {B.shape[0]})")
    value = round(projection_distance(A, B), 12)
    print(f"{value:.12g}")
    return EXIT_OK


COMMANDS = {
    "fit": command_fit,
    "estimate-d": command_estimate_d,
    "simulate": command_simulate,
    "benchmark": command_benchmark,
    "distance": command_distance,
}


def _parse(argv):
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        cmd_index = next(i for i, tok in enumerate(argv) if tok in COMMANDS)
        argv = argv[:cmd_index + 1] + read_config(known.config) + argv[cmd_index + 1:]
    return parser.parse_args(argv)


def main(argv=None):
    try:
        args = _parse(argv)
    except UsageError as exc:
        print(f"lassosir: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StopIteration:
        print("lassosir: --config needs a subcommand", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    if hasattr(args, "seed") and args.seed is None:
        args.seed = secrets.randbits(31)
    log.warning("resolved config: %s", json.dumps(_resolved(args), sort_keys=True))
    if args.dump_config:
        dump_config(args, args.dump_config)
    try:
        return COMMANDS[args.command](args)
    except (DegenerateSpectrumError, SingularCovarianceError, EmptyPathError,
            np.linalg.LinAlgError) as exc:
        print(f"lassosir: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (DataFormatError, UsageError, ValueError, OSError) as exc:
        print(f"lassosir: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
