"""CSV ingestion and covariate preprocessing.

Files use the usual samples-as-rows layout; loaders return the ``p x n``
covariate matrix used everywhere else in the package.
"""

import csv
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm, rankdata

from .exceptions import DataFormatError

MISSING = {"", "na", "nan", "null", "none", "?"}


@dataclass
class LoadedData:
    X: np.ndarray
    y: np.ndarray
    names: list
    response_name: str


def _parse_cell(text, row, col, header_names):
    where = f"row {row}, column {col}"
    if header_names:
        where += f" ({header_names[col - 1]!r})"
    if text.strip().lower() in MISSING:
        raise DataFormatError(f"missing value at {where}")
    try:
        value = float(text)
    except ValueError:
        raise DataFormatError(f"non-numeric value {text!r} at {where}") from None
    if not np.isfinite(value):
        raise DataFormatError(f"non-finite value {text!r} at {where}")
    return value


def load_csv(path, response_column, header=True):
    """Read a numeric CSV into ``(X, y, names)``.

    ``response_column`` is a column name (with a header) or a 0-based index.
    Row numbers in error messages are 1-based file lines.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataFormatError(f"{path}: no data")
    names = None
    first_line = 1
    if header:
        names = [c.strip() for c in rows[0]]
        rows = rows[1:]
        first_line = 2
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    width = len(names) if names else len(rows[0])
    if isinstance(response_column, str) and not response_column.lstrip("-").isdigit():
        if names is None:
            raise DataFormatError("a named response column needs a header row")
        if response_column not in names:
            raise DataFormatError(f"response column {response_column!r} not found")
        target = names.index(response_column)
    else:
        target = int(response_column)
        if not -width <= target < width:
            raise DataFormatError(f"response column index {target} out of range")
        target %= width
    values = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        line = first_line + i
        if len(row) != width:
            raise DataFormatError(f"row {line} has {len(row)} fields, expected {width}")
        for j, cell in enumerate(row):
            values[i, j] = _parse_cell(cell, line, j + 1, names)
    y = values[:, target]
    if np.all(y == y[0]):
        raise DataFormatError("response is constant")
    keep = [j for j in range(width) if j != target]
    col_names = [names[j] for j in keep] if names else [f"x{j + 1}" for j in keep]
    response_name = names[target] if names else f"column {target}"
    return LoadedData(np.ascontiguousarray(values[:, keep].T), y, col_names, response_name)


def quantile_normalize(X, names=None):
    """Replace each variable by normal scores ``Phi^{-1}((rank - 0.5) / n)``.

    Ties share their average rank. A constant variable has no ranking and is
    rejected.
    """
    X = np.asarray(X, dtype=float)
    p, n = X.shape
    if n < 2:
        raise ValueError("quantile normalization needs at least two samples")
    out = np.empty_like(X)
    for i in range(p):
        row = X[i]
        if np.all(row == row[0]):
            label = names[i] if names is not None else f"#{i}"
            raise ValueError(f"variable {label} is constant; cannot rank it")
        out[i] = norm.ppf((rankdata(row) - 0.5) / n)
    return out


def write_csv(path, X, y, names=None, response_name="y"):
    """Write a ``p x n`` design and response as samples-as-rows CSV.

    Values use 17 significant digits so a reload is bit-exact.
    """
    X = np.asarray(X, dtype=float)
    names = names or [f"x{i + 1}" for i in range(X.shape[0])]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(names) + [response_name])
        for j in range(X.shape[1]):
            writer.writerow([repr(float(v)) for v in X[:, j]] + [repr(float(y[j]))])


def write_matrix(path, M, row_names=None, col_prefix="dir"):
    """Write a ``p x k`` matrix with a leading ``variable`` column."""
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M[:, None]
    row_names = row_names or [f"x{i + 1}" for i in range(M.shape[0])]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["variable"] + [f"{col_prefix}{k + 1}" for k in range(M.shape[1])])
        for name, row in zip(row_names, M):
            writer.writerow([name] + [repr(float(v)) for v in row])


def read_matrix(path):
    """Inverse of :func:`write_matrix` (also accepts a bare numeric CSV)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise DataFormatError(f"{path}: empty file")
    header = rows[0]
    try:
        [float(c) for c in header]
        body = rows
    except ValueError:
        body = rows[1:]
    if not body:
        return np.zeros((0, max(len(header) - 1, 0)))
    skip = 0
    try:
        float(body[0][0])
    except ValueError:
        skip = 1
    M = np.empty((len(body), len(body[0]) - skip))
    for i, row in enumerate(body):
        for j, cell in enumerate(row[skip:]):
            try:
                M[i, j] = float(cell)
            except ValueError:
                raise DataFormatError(f"{path}: bad value {cell!r} at row {i + 1}") from None
    return M
