import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose, assert_array_equal
from scipy.stats import kstest

from lassosir.data import load_csv, quantile_normalize, read_matrix, write_csv, write_matrix
from lassosir.exceptions import DataFormatError


def write(tmp_path, text, name="d.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_load_named_response(tmp_path):
    path = write(tmp_path, "a,y,b\n1,2,3\n4,5,6\n7,8,9\n")
    data = load_csv(path, "y")
    assert data.X.shape == (2, 3)
    assert_array_equal(data.X, [[1, 4, 7], [3, 6, 9]])
    assert_array_equal(data.y, [2, 5, 8])
    assert data.names == ["a", "b"]


def test_load_positional_without_header(tmp_path):
    path = write(tmp_path, "1,2,3\n4,5,6\n7,8,10\n")
    data = load_csv(path, 2, header=False)
    assert_array_equal(data.y, [3, 6, 10])
    assert data.names == ["x1", "x2"]
    assert_array_equal(load_csv(path, "0", header=False).y, [1, 4, 7])


def test_missing_cell_reports_position(tmp_path):
    path = write(tmp_path, "a,y\n1,2\n,3\n")
    with pytest.raises(DataFormatError, match="row 3, column 1"):
        load_csv(path, "y")


@pytest.mark.parametrize("text,pattern", [
    ("a,y\n1,x\n2,3\n", "non-numeric"),
    ("a,y\n1,2\n3\n", "fields"),
    ("a,y\n1,2\n3,2\n", "constant"),
    ("a,y\n1,inf\n3,2\n", "non-finite"),
])
def test_load_errors(tmp_path, text, pattern):
    with pytest.raises(DataFormatError, match=pattern):
        load_csv(write(tmp_path, text), "y")


def test_unknown_response(tmp_path):
    with pytest.raises(DataFormatError):
        load_csv(write(tmp_path, "a,y\n1,2\n3,4\n"), "z")
    with pytest.raises(DataFormatError):
        load_csv(write(tmp_path, "1,2\n3,4\n"), 5, header=False)


def test_csv_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    X, y = rng.standard_normal((3, 7)), rng.standard_normal(7)
    path = tmp_path / "r.csv"
    write_csv(path, X, y)
    data = load_csv(path, "y")
    assert_array_equal(data.X, X)
    assert_array_equal(data.y, y)


def test_matrix_round_trip(tmp_path):
    M = np.random.default_rng(1).standard_normal((4, 2))
    write_matrix(tmp_path / "m.csv", M, ["a", "b", "c", "d"])
    assert_array_equal(read_matrix(tmp_path / "m.csv"), M)


def test_quantile_normalize_example():
    out = quantile_normalize(np.array([[10.0, 20.0, 30.0]]))
    assert_allclose(out[0], [-0.967421566101701, 0.0, 0.967421566101701], atol=1e-12)


def test_quantile_normalize_ties_average():
    out = quantile_normalize(np.array([[1.0, 2.0, 2.0, 3.0]]))
    assert out[0, 1] == out[0, 2]


def test_quantile_normalize_constant_row():
    with pytest.raises(ValueError, match="b"):
        quantile_normalize(np.array([[1.0, 2.0], [5.0, 5.0]]), names=["a", "b"])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(-1000, 1000), min_size=2, max_size=40, unique=True))
def test_quantile_normalize_rank_invariant(values):
    row = np.array([values], dtype=float)
    assert_array_equal(quantile_normalize(row), quantile_normalize(row ** 3 + 5 * row))


@pytest.mark.parametrize("n", [200, 1000])
def test_quantile_normalize_ks(n):
    rng = np.random.default_rng(n)
    X = rng.exponential(size=(3, n))
    for row in quantile_normalize(X):
        assert kstest(row, "norm").statistic <= 0.05
