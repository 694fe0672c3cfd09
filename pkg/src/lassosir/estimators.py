"""Central-space estimators: Lasso-SIR, DT-SIR and Matrix Lasso, plus
selection of the number of directions from adjusted eigenvalues."""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DegenerateSpectrumError, SingularCovarianceError
from .lasso import (
    DEFAULT_TOL,
    CrossValidator,
    solve_gram,
)
from .linalg import orthonormal_basis, two_means_split
from .sir import EIG_EPS, pseudo_response, sir_spectrum, slice_design

DEFAULT_SLICES = 20
DEFAULT_FOLDS = 10


@dataclass
class CentralSpaceEstimate:
    """Estimated directions ``B_hat`` (``p x d``) and an orthonormal basis of their span.

    ``adjusted_eigenvalues[i] = eigenvalues[i] * ||B_hat[:, i]||``.
    ``candidate_adjusted_eigenvalues`` is only set when ``d`` was estimated
    and then lists all ``H`` candidates that were clustered.
    """

    B_hat: np.ndarray
    basis: np.ndarray
    eigenvalues: np.ndarray
    adjusted_eigenvalues: np.ndarray
    d_used: int
    mu_used: list = field(default_factory=list)
    method: str = "lasso-sir"
    d_estimated: bool = False
    candidate_adjusted_eigenvalues: np.ndarray | None = None
    selected: np.ndarray | None = None

    def truncate(self, d):
        B = self.B_hat[:, :d]
        return CentralSpaceEstimate(
            B_hat=B,
            basis=orthonormal_basis(B),
            eigenvalues=self.eigenvalues[:d],
            adjusted_eigenvalues=self.adjusted_eigenvalues[:d],
            d_used=d,
            mu_used=self.mu_used[:d],
            method=self.method,
            selected=self.selected,
        )


def _noise_floor(eigenvalues, eps):
    return eps * max(1.0, float(eigenvalues[0])) if len(eigenvalues) else eps


def _resolve_slices(y, H, discrete):
    if discrete:
        levels = np.unique(np.asarray(y)).size
        if H is not None and H != levels:
            raise ValueError(f"discrete mode: H={H} but the response has {levels} levels")
        return levels
    if H is None or H < 2:
        raise ValueError("H must be at least 2")
    return H


def _lasso_sir_directions(X, y, H, d, discrete, cv_folds, seed, mu_theory, skip_degenerate,
                          n_grid, ratio, tol):
    Xc, design = slice_design(X, y, H, discrete=discrete)
    p, n = Xc.shape
    spectrum = sir_spectrum(design.slice_means, d)
    lam = spectrum.eigenvalues
    floor = _noise_floor(lam, EIG_EPS)
    usable = np.flatnonzero(lam > floor)
    if not skip_degenerate and usable.size < d:
        bad = int(np.flatnonzero(lam <= floor)[0])
        raise DegenerateSpectrumError(bad + 1, float(lam[bad]))

    B = np.zeros((p, d))
    mus = [0.0] * d
    if usable.size:
        sub = type(spectrum)(lam[usable], spectrum.eigenvectors[:, usable])
        Y = pseudo_response(design, sub)
        # the same fold split serves every direction so that fits with
        # different d agree on their shared leading directions
        cv = None if mu_theory is not None else CrossValidator(
            Xc, folds=cv_folds, seed=seed, tol=tol)
        for col, i in enumerate(usable):
            if mu_theory is not None:
                mu = mu_theory * np.sqrt(np.log(p) / (n * lam[i]))
                sol = solve_gram(Xc @ Xc.T / n, Xc @ Y[:, col] / n, mu, tol=tol)
                B[:, i], mus[i] = sol.beta, float(mu)
            else:
                result = cv.select(Y[:, col], n_grid=n_grid, ratio=ratio)
                B[:, i], mus[i] = result.beta, result.mu
    adjusted = lam * np.linalg.norm(B, axis=0)
    return CentralSpaceEstimate(
        B_hat=B,
        basis=orthonormal_basis(B),
        eigenvalues=lam,
        adjusted_eigenvalues=adjusted,
        d_used=d,
        mu_used=mus,
    )


def lasso_sir(X, y, H=DEFAULT_SLICES, d=None, discrete=False, cv_folds=DEFAULT_FOLDS,
              seed=0, mu_theory=None, n_grid=100, ratio=1e-3, tol=DEFAULT_TOL):
    """Sparse SIR via Lasso regressions on pseudo-responses.

    Parameters
    ----------
    X : (p, n) array
        Covariates, one column per sample. Centred internally.
    y : (n,) array
        Response; only its ranks matter in continuous mode.
    H : int
        Number of slices. Ignored (set to the level count) in discrete mode.
    d : int, optional
        Number of directions. Estimated by clustering adjusted eigenvalues when
        omitted; defaults to ``H - 1`` in discrete mode.
    mu_theory : float, optional
        Use ``mu_i = C sqrt(log p / (n lam_i))`` with this ``C`` instead of
        cross-validation.

    Returns
    -------
    CentralSpaceEstimate
    """
    H = _resolve_slices(y, H, discrete)
    if d is None and discrete:
        d = H - 1
    if d is not None:
        return _lasso_sir_directions(X, y, H, d, discrete, cv_folds, seed, mu_theory,
                                     False, n_grid, ratio, tol)
    full = _lasso_sir_directions(X, y, H, H, discrete, cv_folds, seed, mu_theory,
                                 True, n_grid, ratio, tol)
    d_hat = two_means_split(full.adjusted_eigenvalues)
    est = full.truncate(d_hat)
    est.d_estimated = True
    est.candidate_adjusted_eigenvalues = full.adjusted_eigenvalues
    return est


def estimate_d(X, y, H=DEFAULT_SLICES, cv_folds=DEFAULT_FOLDS, seed=0, discrete=False,
               mu_theory=None):
    """Number of directions: run Lasso-SIR with ``d = H`` and split the
    adjusted eigenvalues into two clusters; the upper cluster's size is ``d``.

    Directions whose eigenvalue is numerically zero are not fitted and get an
    adjusted eigenvalue of 0.
    """
    H = _resolve_slices(y, H, discrete)
    full = _lasso_sir_directions(X, y, H, H, discrete, cv_folds, seed, mu_theory, True,
                                 100, 1e-3, DEFAULT_TOL)
    return two_means_split(full.adjusted_eigenvalues)


def default_screen_size(n, p):
    """``min(p, floor(n / (4 log n)))``."""
    return int(min(p, np.floor(n / (4.0 * np.log(n)))))


def screen_diagonal(diagonal, screen_size):
    """Indices of the ``screen_size`` largest entries (ties: lower index first), sorted."""
    diagonal = np.asarray(diagonal, dtype=float)
    order = np.argsort(-diagonal, kind="stable")
    return np.sort(order[:screen_size])


def _inverse_apply(S, V):
    k = S.shape[0]
    try:
        np.linalg.cholesky(S)
        if np.linalg.cond(S) < 1e12:
            return np.linalg.solve(S, V)
    except np.linalg.LinAlgError:
        pass
    ridge = 1e-8 * np.trace(S) / k
    S_r = S + ridge * np.eye(k)
    try:
        np.linalg.cholesky(S_r)
    except np.linalg.LinAlgError as exc:
        raise SingularCovarianceError("screened covariance is singular even with a ridge") from exc
    if not np.isfinite(np.linalg.cond(S_r)) or np.linalg.cond(S_r) > 1e15:
        raise SingularCovarianceError("screened covariance is singular even with a ridge")
    return np.linalg.solve(S_r, V)


def dt_sir(X, y, H=DEFAULT_SLICES, d=1, screen_size=None, discrete=False):
    """Diagonal-thresholding SIR.

    Keeps the predictors with the largest diagonal entries of the SIR matrix,
    runs plain SIR (inverse sample covariance times the leading eigenvectors)
    on them and pads the other rows with zeros.
    """
    H = _resolve_slices(y, H, discrete)
    Xc, design = slice_design(X, y, H, discrete=discrete)
    p, n = Xc.shape
    if screen_size is None:
        screen_size = max(d, default_screen_size(n, p))
    if screen_size >= n:
        raise ValueError(f"screen_size={screen_size} must be smaller than n={n}")
    if screen_size < d:
        raise ValueError("screen_size must be at least d")
    X_H = design.slice_means
    if p <= screen_size:
        keep = np.arange(p)
    else:
        keep = screen_diagonal(np.sum(X_H ** 2, axis=1) / H, screen_size)
    spectrum = sir_spectrum(X_H[keep], d)
    Xi = Xc[keep]
    B_i = _inverse_apply(Xi @ Xi.T / n, spectrum.eigenvectors)
    B = np.zeros((p, d))
    B[keep] = B_i
    return CentralSpaceEstimate(
        B_hat=B,
        basis=orthonormal_basis(B),
        eigenvalues=spectrum.eigenvalues,
        adjusted_eigenvalues=spectrum.eigenvalues * np.linalg.norm(B, axis=0),
        d_used=d,
        method="dt-sir",
        selected=keep,
    )


def matrix_lasso_solve(A, eta, mu, init=None, tol=DEFAULT_TOL):
    """Minimise ``||A beta - eta||^2 + mu ||beta||_1`` for symmetric ``A``."""
    A = np.asarray(A, dtype=float)
    # halve the objective to reach the 1/2 b'Qb - b'beta + (mu/2)|beta| form
    return solve_gram(A @ A, A @ eta, mu / 2.0, init=init, tol=tol,
                      const=0.5 * float(eta @ eta)).beta


def _matrix_lasso_cv(Xc, etas, folds, seed, n_grid, ratio, tol):
    # ||A b - eta||^2 is a least-squares fit with the p equations as
    # observations; CV holds out equations. The Lasso form (1/2p)||.||^2 +
    # m |b|_1 used by CrossValidator corresponds to mu = 2 p m.
    p, n = Xc.shape
    A = Xc @ Xc.T / n
    cv = CrossValidator(A, folds=min(folds, p), seed=seed, tol=tol) if p >= 2 else None
    betas, mus = [], []
    for eta in etas.T:
        if cv is None or np.max(np.abs(A @ eta)) == 0.0:
            betas.append(matrix_lasso_solve(A, eta, 0.0, tol=tol))
            mus.append(0.0)
            continue
        result = cv.select(eta, n_grid=n_grid, ratio=ratio)
        betas.append(result.beta)
        mus.append(2.0 * p * result.mu)
    return np.column_stack(betas) if betas else np.zeros((p, 0)), mus


def matrix_lasso(X, y, H=DEFAULT_SLICES, d=1, cv_folds=DEFAULT_FOLDS, seed=0,
                 discrete=False, n_grid=100, ratio=1e-3, tol=DEFAULT_TOL):
    """Matrix Lasso: for each leading SIR eigenvector ``eta_i`` solve
    ``||A beta - eta_i||^2 + mu_i ||beta||_1`` with ``A = (1/n) X X^T``.

    ``mu_i`` is chosen by K-fold CV over the ``p`` rows of the system
    ``A beta = eta_i`` (each row is one observation of the regression).
    """
    H = _resolve_slices(y, H, discrete)
    Xc, design = slice_design(X, y, H, discrete=discrete)
    spectrum = sir_spectrum(design.slice_means, d)
    B, mus = _matrix_lasso_cv(Xc, spectrum.eigenvectors, cv_folds, seed, n_grid, ratio, tol)
    return CentralSpaceEstimate(
        B_hat=B,
        basis=orthonormal_basis(B),
        eigenvalues=spectrum.eigenvalues,
        adjusted_eigenvalues=spectrum.eigenvalues * np.linalg.norm(B, axis=0),
        d_used=d,
        mu_used=mus,
        method="matrix-lasso",
    )
