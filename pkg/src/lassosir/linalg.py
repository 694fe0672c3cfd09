"""Dense linear-algebra helpers.

Matrices are plain C-ordered (row-major) ``numpy`` float arrays. Covariate
matrices follow the ``p x n`` convention: one row per variable, one column
per sample.
"""

from dataclasses import dataclass

import numpy as np

RANK_TOL = 1e-10


@dataclass(frozen=True)
class EigenPairs:
    """Leading eigenvalues (nonincreasing) and unit eigenvectors as columns."""

    values: np.ndarray
    vectors: np.ndarray


def _fix_signs(U):
    # make the largest-magnitude entry of every column positive so that
    # eigenvectors are reproducible across LAPACK builds
    if U.size == 0:
        return U
    idx = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[idx, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs


def orthonormal_basis(B, tol=RANK_TOL):
    """Orthonormal basis of ``col(B)``.

    Directions whose singular value is at most ``tol`` times the largest one
    are dropped, so the result has ``r <= d`` columns. An all-zero ``B``
    yields a ``p x 0`` array.
    """
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not np.all(np.isfinite(B)):
        raise ValueError("B contains non-finite entries")
    p = B.shape[0]
    if B.shape[1] == 0:
        return np.zeros((p, 0))
    U, s, _ = np.linalg.svd(B, full_matrices=False)
    if s[0] == 0.0:
        return np.zeros((p, 0))
    r = int(np.sum(s > tol * s[0]))
    return _fix_signs(U[:, :r])


def projection_matrix(B):
    """Orthogonal projector onto ``col(B)`` (``p x p``)."""
    U = orthonormal_basis(B)
    return U @ U.T


def projection_distance(A, B):
    """Frobenius norm of ``P_A - P_B``.

    Computed as ``||(I - P_A) U_B||_F^2 + ||(I - P_B) U_A||_F^2`` from
    orthonormal bases, which avoids forming ``p x p`` projectors and keeps
    full relative accuracy when the spans nearly coincide.
    """
    UA = orthonormal_basis(A)
    UB = orthonormal_basis(B)
    if UA.shape[0] != UB.shape[0]:
        raise ValueError(f"row counts differ: {UA.shape[0]} vs {UB.shape[0]}")
    cross = UA.T @ UB
    rb = UB - UA @ cross
    ra = UA - UB @ cross.T
    return float(np.sqrt(np.sum(rb * rb) + np.sum(ra * ra)))


def top_eigenpairs(F, k):
    """The ``k`` leading eigenpairs of ``F @ F.T`` from a thin SVD of ``F``.

    ``F`` is ``p x H`` with ``H`` small, so this costs ``O(p H^2)`` and never
    builds the ``p x p`` matrix.
    """
    F = np.asarray(F, dtype=float)
    if F.ndim != 2:
        raise ValueError("F must be two-dimensional")
    p, H = F.shape
    if k < 0 or k > min(p, H):
        raise ValueError(f"k={k} must lie in [0, min(p, H)] = [0, {min(p, H)}]")
    U, s, _ = np.linalg.svd(F, full_matrices=False)
    return EigenPairs(values=s[:k] ** 2, vectors=_fix_signs(U[:, :k]).copy())


def two_means_split(values):
    """Size of the upper cluster in the optimal one-dimensional 2-means split.

    The optimum of 1-D 2-means is a threshold on the sorted values, so every
    split point is scanned with prefix sums. Ties in within-cluster sum of
    squares go to the smaller upper cluster. When all values are equal there
    is no gap and the full count is returned.
    """
    v = np.asarray(values, dtype=float).ravel()
    n = v.size
    if n == 0:
        raise ValueError("two_means_split needs at least one value")
    if not np.all(np.isfinite(v)):
        raise ValueError("values must be finite")
    if n == 1 or np.all(v == v[0]):
        return n
    s = np.sort(v)[::-1]
    csum = np.cumsum(s)
    csq = np.cumsum(s * s)
    total, total_sq = csum[-1], csq[-1]
    m = np.arange(1, n)
    upper = csq[:-1] - csum[:-1] ** 2 / m
    lower = (total_sq - csq[:-1]) - (total - csum[:-1]) ** 2 / (n - m)
    sse = upper + lower
    # relative slack so round-off cannot reorder equivalent splits
    best = sse.min()
    slack = 1e-12 * max(total_sq, 1.0)
    return int(m[np.nonzero(sse <= best + slack)[0][0]])
