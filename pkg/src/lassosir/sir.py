"""Slicing, slice means, the SIR spectrum and pseudo-responses."""

from dataclasses import dataclass, replace

import numpy as np

from .exceptions import DegenerateSpectrumError
from .linalg import top_eigenpairs

EIG_EPS = 1e-12


@dataclass(frozen=True)
class SlicedDesign:
    """Partition of the samples into slices.

    ``assignment[j]`` is the 0-based slice of sample ``j``; ``slice_sizes[h]``
    counts the samples in slice ``h``. ``slice_means`` (``p x H``) is filled
    in by :func:`slice_design` or via ``with_means``.
    """

    assignment: np.ndarray
    slice_sizes: np.ndarray
    slice_means: np.ndarray | None = None

    @property
    def n_slices(self):
        return len(self.slice_sizes)

    @property
    def n_samples(self):
        return len(self.assignment)

    def members(self, h):
        return np.flatnonzero(self.assignment == h)

    def with_means(self, means):
        return replace(self, slice_means=means)


@dataclass(frozen=True)
class SirSpectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def center_samples(X):
    """Subtract each variable's sample mean (rows of the ``p x n`` matrix)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] < 1:
        raise ValueError("X must be p x n with n >= 1")
    return X - X.mean(axis=1, keepdims=True)


def assign_slices(y, H, discrete=False):
    """Slice the samples by their response.

    Continuous mode sorts ``y`` stably (ties keep original order) and fills
    ``H`` contiguous slices; the first ``n mod H`` slices get one extra
    sample. Discrete mode puts every distinct level in its own slice, in
    increasing level order, and requires ``H`` to equal the level count
    (``H=None`` means "use the level count").
    """
    y = np.asarray(y, dtype=float).ravel()
    n = y.size
    if not np.all(np.isfinite(y)):
        raise ValueError("y contains non-finite values")
    assignment = np.empty(n, dtype=np.int64)
    if discrete:
        levels, codes = np.unique(y, return_inverse=True)
        if levels.size < 2:
            raise ValueError("discrete mode needs at least two response levels")
        if H is not None and H != levels.size:
            raise ValueError(
                f"discrete mode: H={H} but the response has {levels.size} levels"
            )
        assignment[:] = codes
        sizes = np.bincount(codes, minlength=levels.size)
        return SlicedDesign(assignment, sizes)

    if H is None or H < 2:
        raise ValueError("H must be at least 2")
    if H > n:
        raise ValueError(f"H={H} exceeds the sample count n={n}")
    order = np.argsort(y, kind="stable")
    base, extra = divmod(n, H)
    sizes = np.full(H, base, dtype=np.int64)
    sizes[:extra] += 1
    assignment[order] = np.repeat(np.arange(H), sizes)
    return SlicedDesign(assignment, sizes)


def slice_means(X_centered, design):
    """``p x H`` matrix whose column ``h`` averages the samples in slice ``h``."""
    X_centered = np.asarray(X_centered, dtype=float)
    n = X_centered.shape[1]
    if design.n_samples != n:
        raise ValueError("design does not cover every sample")
    sizes = design.slice_sizes
    if np.any(sizes < 1):
        raise ValueError(f"empty slice(s): {np.flatnonzero(sizes < 1).tolist()}")
    indicator = np.zeros((n, design.n_slices))
    indicator[np.arange(n), design.assignment] = 1.0
    return (X_centered @ indicator) / sizes


def sir_spectrum(X_H, k):
    """Top-``k`` eigenpairs of ``(1/H) X_H X_H^T``."""
    X_H = np.asarray(X_H, dtype=float)
    H = X_H.shape[1]
    pairs = top_eigenpairs(X_H / np.sqrt(H), k)
    return SirSpectrum(pairs.values, pairs.vectors)


def slice_design(X, y, H=20, discrete=False):
    """Center ``X``, slice by ``y`` and attach slice means.

    Returns ``(X_centered, design)``.
    """
    Xc = center_samples(X)
    if Xc.shape[1] != np.size(y):
        raise ValueError(f"X has {Xc.shape[1]} samples but y has {np.size(y)}")
    design = assign_slices(y, H, discrete=discrete)
    return Xc, design.with_means(slice_means(Xc, design))


def pseudo_response(design, spectrum, eps=EIG_EPS):
    """Pseudo-responses ``Y~`` (``n x k``) satisfying ``(1/n) X Y~ = eta``.

    Sample ``j`` in slice ``h`` gets ``n / (H c_h lam_i) * xbar_h^T eta_i``.
    With equal slice sizes this is exactly ``(1/(c lam)) M M^T X^T eta``.
    """
    if design.slice_means is None:
        raise ValueError("design has no slice means attached")
    lam = np.asarray(spectrum.eigenvalues, dtype=float)
    floor = eps * max(1.0, float(lam[0])) if lam.size else eps
    for i, value in enumerate(lam):
        if not value > floor:
            raise DegenerateSpectrumError(i + 1, float(value))
    n, H = design.n_samples, design.n_slices
    scores = design.slice_means.T @ spectrum.eigenvectors  # H x k
    weights = n / (H * design.slice_sizes[:, None] * lam[None, :])
    return (scores * weights)[design.assignment]
