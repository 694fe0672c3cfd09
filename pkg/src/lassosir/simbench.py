"""Simulated single/multiple-index data and the Monte-Carlo benchmark harness.

Seeding: every (cell, replication) pair gets its own
``np.random.SeedSequence(root_seed, spawn_key=(setting, p, rho*1000, cov, rep))``.
Results therefore do not depend on execution order or on ``n_jobs``.
"""

import csv
import io
import json
import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy.signal import lfilter

from .estimators import dt_sir, lasso_sir, matrix_lasso
from .linalg import projection_distance

ROMAN = ("I", "II", "III", "IV", "V", "VI", "VII", "VIII", "IX", "X", "XI", "XII", "XIII")
METHODS = ("lasso-sir", "dt-sir", "matrix-lasso", "lasso-sir-known-d")
COV_KINDS = ("ar1", "block")
CROSS_BLOCK = 0.1


@dataclass(frozen=True)
class CovarianceSpec:
    """``ar1``: ``rho**|i-j|``. ``block``: ``rho`` within S and within its
    complement, ``0.1`` across, unit diagonal. ``active_set`` is 0-based."""

    kind: str
    p: int
    rho: float
    active_set: tuple = ()

    def __post_init__(self):
        if self.kind not in COV_KINDS:
            raise ValueError(f"unknown covariance kind {self.kind!r}")
        if self.kind == "ar1" and not -1 < self.rho < 1:
            raise ValueError("ar1 needs -1 < rho < 1")
        if self.p < 1:
            raise ValueError("p must be positive")


def make_covariance(spec):
    """Return ``(Sigma, L)`` with ``L @ L.T == Sigma`` (Cholesky)."""
    p, rho = spec.p, spec.rho
    if spec.kind == "ar1":
        idx = np.arange(p)
        sigma = rho ** np.abs(idx[:, None] - idx[None, :]).astype(float)
        if rho == 0:
            sigma = np.eye(p)
    else:
        inside = np.zeros(p, dtype=bool)
        inside[list(spec.active_set)] = True
        same = inside[:, None] == inside[None, :]
        sigma = np.where(same, rho, CROSS_BLOCK)
        np.fill_diagonal(sigma, 1.0)
    try:
        L = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"covariance {spec} is not positive definite") from exc
    return sigma, L


def sample_covariates(spec, n, rng):
    """``p x n`` draw with columns ~ N(0, Sigma).

    The ``ar1`` family uses the exact autoregressive recursion
    ``x_k = rho x_{k-1} + sqrt(1 - rho^2) z_k`` instead of a Cholesky factor.
    """
    Z = rng.standard_normal((spec.p, n))
    if spec.kind == "ar1":
        rho = spec.rho
        if rho == 0:
            return Z
        scale = np.sqrt(1.0 - rho * rho)
        Z[0] /= scale
        return lfilter([scale], [1.0, -rho], Z, axis=0)
    _, L = make_covariance(spec)
    return L @ Z


def _single(f):
    return lambda z, eps: f(z[:, 0], eps[:, 0])


_LINKS = {
    "I": _single(lambda z, e: z + e),
    "II": _single(lambda z, e: z ** 3 / 2 + e),
    "III": _single(lambda z, e: np.sin(z) * np.exp(z) + e),
    "IV": _single(lambda z, e: np.exp(z / 10) + e),
    "V": _single(lambda z, e: np.exp(z + e)),
    "VI": lambda z, e: np.abs(z[:, 1] / 4 + 2) ** 3 * np.sign(z[:, 0]) + e[:, 0],
    "VII": lambda z, e: z[:, 0] * np.exp(z[:, 1]) + e[:, 0],
    "VIII": lambda z, e: z[:, 0] * np.exp(z[:, 1] + e[:, 0]),
    "IX": lambda z, e: z[:, 0] * (2 + z[:, 1] / 3) ** 2 + e[:, 0],
    "X": _single(lambda z, e: (z + e > 0).astype(float)),
    "XI": _single(lambda z, e: (np.exp(z) + e > 0).astype(float)),
    "XII": _single(lambda z, e: (z ** 3 / 2 + e > 0).astype(float)),
    "XIII": lambda z, e: np.where(
        z[:, 0] + e[:, 0] < 0, 1.0, np.where(z[:, 1] + e[:, 1] < 0, 2.0, 3.0)
    ),
}


@dataclass(frozen=True)
class SimulationSetting:
    """One simulation model.

    ``blocks[j] = (start, stop)`` is the 1-based inclusive row range of the
    nonzero entries in coefficient column ``j``; they are ``N(0, 1)`` draws
    when ``random_coef`` and ones otherwise.
    """

    id: str
    link: Callable
    blocks: tuple
    random_coef: bool
    response_kind: str = "continuous"
    noise_dim: int = 1

    @property
    def d_true(self):
        return len(self.blocks)

    @property
    def active_set(self):
        rows = set()
        for start, stop in self.blocks:
            rows.update(range(start - 1, stop))
        return tuple(sorted(rows))

    @property
    def discrete(self):
        return self.response_kind != "continuous"

    @property
    def n_levels(self):
        return {"dichotomous": 2, "trichotomous": 3}.get(self.response_kind)

    def draw_coefficients(self, p, rng):
        if p < max(stop for _, stop in self.blocks):
            raise ValueError(f"setting {self.id} needs p >= {max(s for _, s in self.blocks)}")
        B = np.zeros((p, self.d_true))
        for j, (start, stop) in enumerate(self.blocks):
            size = stop - start + 1
            B[start - 1:stop, j] = rng.standard_normal(size) if self.random_coef else 1.0
        return B


def _setting(id, blocks, random_coef, kind="continuous", noise_dim=1):
    return SimulationSetting(id, _LINKS[id], blocks, random_coef, kind, noise_dim)


SETTINGS = {
    s.id: s
    for s in (
        _setting("I", ((1, 10),), True),
        _setting("II", ((1, 20),), True),
        _setting("III", ((1, 10),), True),
        _setting("IV", ((1, 50),), True),
        _setting("V", ((1, 7),), True),
        _setting("VI", ((1, 4), (5, 7)), False),
        _setting("VII", ((1, 7), (8, 12)), True),
        _setting("VIII", ((1, 7), (8, 12)), True),
        _setting("IX", ((1, 8), (9, 12)), False),
        _setting("X", ((1, 10),), True, "dichotomous"),
        _setting("XI", ((1, 7),), True, "dichotomous"),
        _setting("XII", ((1, 20),), True, "dichotomous"),
        _setting("XIII", ((1, 7), (8, 12)), True, "trichotomous", noise_dim=2),
    )
}


def get_setting(setting):
    if isinstance(setting, SimulationSetting):
        return setting
    key = str(setting).upper()
    if key not in SETTINGS:
        raise ValueError(f"unknown setting {setting!r}; choose from {', '.join(ROMAN)}")
    return SETTINGS[key]


def covariance_for(setting, kind, p, rho):
    """Covariance spec for a setting (the block family needs the active set)."""
    active = get_setting(setting).active_set if kind == "block" else ()
    return CovarianceSpec(kind, p, rho, active)


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    B_true: np.ndarray


def sample_dataset(setting, cov, n, seed):
    """Draw ``(X, y, B_true)``; ``X`` is ``p x n``.

    ``seed`` may be an int, a ``SeedSequence`` or a ``Generator``.
    Draw order: coefficients, covariates, noise.
    """
    setting = get_setting(setting)
    if n < 1:
        raise ValueError("n must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    B = setting.draw_coefficients(cov.p, rng)
    X = sample_covariates(cov, n, rng)
    eps = rng.standard_normal((n, setting.noise_dim))
    z = X.T @ B
    y = np.asarray(setting.link(z, eps), dtype=float)
    return Dataset(X, y, B)


# --- benchmark --------------------------------------------------------------


@dataclass(frozen=True)
class Cell:
    setting: str
    p: int
    cov_kind: str
    rho: float

    def key(self):
        return (ROMAN.index(self.setting), self.p, int(round(self.rho * 1000)) % 2**32,
                COV_KINDS.index(self.cov_kind))


def replication_seed(root_seed, cell, rep):
    return np.random.SeedSequence(root_seed, spawn_key=cell.key() + (rep,))


def _run_replication(cell, rep, root_seed, methods, n, H, cv_folds):
    setting = get_setting(cell.setting)
    ss = replication_seed(root_seed, cell, rep)
    data_seq, cv_seq = ss.spawn(2)
    cov = covariance_for(setting, cell.cov_kind, cell.p, cell.rho)
    data = sample_dataset(setting, cov, n, data_seq)
    cv_seed = int(cv_seq.generate_state(1)[0])
    discrete = setting.discrete
    H_used = setting.n_levels if discrete else H
    out = {}
    d_hat = None
    if discrete:
        d_hat = H_used - 1
    if "lasso-sir" in methods or (not discrete and {"dt-sir", "matrix-lasso"} & set(methods)):
        start = time.perf_counter()
        try:
            est = lasso_sir(data.X, data.y, H=H_used, d=d_hat, discrete=discrete,
                            cv_folds=cv_folds, seed=cv_seed)
            d_hat = est.d_used
            out["lasso-sir"] = (projection_distance(est.basis, data.B_true), d_hat,
                                time.perf_counter() - start, None)
        except Exception as exc:  # recorded per cell, not fatal
            out["lasso-sir"] = (None, None, time.perf_counter() - start, repr(exc))
    runners = {
        "dt-sir": lambda d: dt_sir(data.X, data.y, H=H_used, d=d, discrete=discrete),
        "matrix-lasso": lambda d: matrix_lasso(data.X, data.y, H=H_used, d=d,
                                               cv_folds=cv_folds, seed=cv_seed,
                                               discrete=discrete),
        "lasso-sir-known-d": lambda d: lasso_sir(data.X, data.y, H=H_used,
                                                 d=setting.d_true, discrete=discrete,
                                                 cv_folds=cv_folds, seed=cv_seed),
    }
    for method in methods:
        if method == "lasso-sir":
            continue
        start = time.perf_counter()
        d = setting.d_true if method == "lasso-sir-known-d" else d_hat
        try:
            if d is None:
                raise RuntimeError("no direction count available (lasso-sir failed)")
            est = runners[method](d)
            out[method] = (projection_distance(est.basis, data.B_true), est.d_used,
                           time.perf_counter() - start, None)
        except Exception as exc:
            out[method] = (None, None, time.perf_counter() - start, repr(exc))
    return cell, rep, {m: out[m] for m in methods}


@dataclass
class ReportRow:
    setting: str
    p: int
    rho: float
    cov_kind: str
    method: str
    n_reps: int
    mean_err: float | None
    sd_err: float | None
    mean_d_hat: float | None
    seconds: float | None = None
    n_failed: int = 0
    note: str = ""

    def formatted(self):
        """Cell text formatted as ``mean ( sd )`` to two decimals."""
        if self.mean_err is None:
            return "NA"
        return f"{self.mean_err:.2f} ( {self.sd_err:.2f} )"


FIELDS = ("setting", "p", "rho", "cov_kind", "method", "n_reps", "mean_err", "sd_err",
          "mean_d_hat", "seconds", "n_failed", "note")


@dataclass
class BenchmarkReport:
    rows: list
    seed: int
    config: dict = field(default_factory=dict)
    errors: list = field(default_factory=list)
    replicates: dict = field(default_factory=dict)

    def row(self, setting, p, rho, method, cov_kind="ar1"):
        for r in self.rows:
            if (r.setting, r.p, r.rho, r.method, r.cov_kind) == (setting, p, rho, method, cov_kind):
                return r
        raise KeyError((setting, p, rho, method, cov_kind))

    def to_json(self):
        payload = {
            "seed": self.seed,
            "config": self.config,
            "rows": [asdict(r) for r in self.rows],
            "errors": self.errors,
        }
        return json.dumps(payload, indent=2, sort_keys=False) + "\n"

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(FIELDS)
        for r in self.rows:
            writer.writerow(["" if getattr(r, f) is None else getattr(r, f) for f in FIELDS])
        return buf.getvalue()

    def to_table(self):
        lines = [f"{'setting':>7} {'p':>5} {'cov':>5} {'rho':>4} {'method':>18} "
                 f"{'error':>14} {'d_hat':>5}"]
        for r in self.rows:
            dh = "NA" if r.mean_d_hat is None else f"{r.mean_d_hat:.2g}"
            lines.append(f"{r.setting:>7} {r.p:>5} {r.cov_kind:>5} {r.rho:>4} "
                         f"{r.method:>18} {r.formatted():>14} {dh:>5}")
        return "\n".join(lines) + "\n"


def _aggregate(cell, method, results, record_timing):
    errs = [res[0] for res in results if res[0] is not None]
    ds = [res[1] for res in results if res[1] is not None]
    failed = len(results) - len(errs)
    note = ""
    if len(errs) == 0:
        mean = sd = dmean = None
        note = "all replications failed"
    else:
        mean = float(np.mean(errs))
        dmean = float(np.mean(ds))
        if len(errs) == 1:
            sd = 0.0
            note = "single replication: sd undefined, reported as 0"
        else:
            sd = float(np.std(errs, ddof=1))
    seconds = float(sum(res[2] for res in results)) if record_timing else None
    return ReportRow(cell.setting, cell.p, cell.rho, cell.cov_kind, method, len(results),
                     mean, sd, dmean, seconds, failed, note)


def run_benchmark(settings=("I",), p_grid=(100, 1000), cov_specs=(("ar1", 0.5),),
                  methods=("lasso-sir",), replications=100, n=1000, H=20, seed=0,
                  cv_folds=10, n_jobs=1, record_timing=False, keep_replicates=False):
    """Monte-Carlo estimation-error study.

    For every (setting, p, covariance) cell, ``replications`` datasets are
    drawn and each requested method is scored by the projection distance
    between its estimated span and the truth. DT-SIR and Matrix Lasso use the
    Lasso-SIR direction count of the same replication; discrete
    settings use ``H = #levels`` and ``d = H - 1``.

    Timing is left out of the report unless ``record_timing`` is set, so that
    equal inputs give byte-identical output.
    """
    if replications < 1:
        raise ValueError("replications must be at least 1")
    methods = tuple(methods)
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}; choose from {METHODS}")
    cells = [Cell(get_setting(s).id, int(p), kind, float(rho))
             for s in settings for p in p_grid for kind, rho in cov_specs]
    tasks = [(cell, rep) for cell in cells for rep in range(replications)]
    args = (seed, methods, n, H, cv_folds)
    if n_jobs == 1:
        outputs = [_run_replication(c, r, *args) for c, r in tasks]
    else:
        from joblib import Parallel, delayed

        outputs = Parallel(n_jobs=n_jobs)(delayed(_run_replication)(c, r, *args)
                                          for c, r in tasks)
    by_cell = {}
    for cell, rep, res in outputs:
        by_cell.setdefault(cell, {})[rep] = res
    rows, errors, replicates = [], [], {}
    for cell in cells:
        reps = by_cell[cell]
        for method in methods:
            results = [reps[r][method] for r in sorted(reps)]
            rows.append(_aggregate(cell, method, results, record_timing))
            for r in sorted(reps):
                if reps[r][method][3] is not None:
                    errors.append({"setting": cell.setting, "p": cell.p, "rho": cell.rho,
                                   "cov_kind": cell.cov_kind, "method": method,
                                   "replication": r, "error": reps[r][method][3]})
            if keep_replicates:
                replicates[(cell.setting, cell.p, cell.rho, cell.cov_kind, method)] = [
                    (res[0], res[1]) for res in results]
    config = {"settings": [c for c in dict.fromkeys(c.setting for c in cells)],
              "p_grid": [int(p) for p in p_grid],
              "cov_specs": [[k, float(r)] for k, r in cov_specs],
              "methods": list(methods), "replications": replications, "n": n, "H": H,
              "cv_folds": cv_folds}
    return BenchmarkReport(rows, seed, config, errors, replicates)
