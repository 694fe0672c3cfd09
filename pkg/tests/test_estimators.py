import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from lassosir import estimators
from lassosir.estimators import (
    default_screen_size,
    dt_sir,
    estimate_d,
    lasso_sir,
    matrix_lasso,
    matrix_lasso_solve,
    screen_diagonal,
)
from lassosir.exceptions import DegenerateSpectrumError
from lassosir.linalg import orthonormal_basis, projection_distance, two_means_split
from lassosir.sir import sir_spectrum, slice_design


def single_index(n=400, p=20, seed=0, noise=0.2):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((p, n))
    y = X[0] + X[1] + noise * rng.standard_normal(n)
    truth = np.zeros((p, 1))
    truth[:2] = 1.0
    return X, y, truth


def test_noiseless_linear_recovers_first_axis():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((2, 200))
    est = lasso_sir(X, X[0].copy(), H=20, d=1)
    assert projection_distance(est.basis, np.array([[1.0], [0.0]])) < 0.05


def test_monotone_transform_gives_identical_estimate():
    X, y, _ = single_index(seed=1)
    a = lasso_sir(X, y, d=1, seed=4)
    b = lasso_sir(X, np.exp(y / 4), d=1, seed=4)
    assert_array_equal(a.B_hat, b.B_hat)


def test_predictor_permutation():
    X, y, truth = single_index(seed=2)
    perm = np.random.default_rng(9).permutation(X.shape[0])
    a = lasso_sir(X, y, d=1, seed=3)
    b = lasso_sir(X[perm], y, d=1, seed=3)
    assert_allclose(b.B_hat, a.B_hat[perm], atol=1e-8)
    assert projection_distance(b.basis, truth[perm]) == pytest.approx(
        projection_distance(a.basis, truth), abs=1e-8)


def test_estimated_d_matches_fixed_d_fit():
    X, y, truth = single_index(seed=3)
    auto = lasso_sir(X, y, seed=5)
    assert auto.d_estimated and auto.d_used == 1
    assert auto.candidate_adjusted_eigenvalues.size == 20
    fixed = lasso_sir(X, y, d=auto.d_used, seed=5)
    assert_allclose(auto.B_hat, fixed.B_hat, atol=1e-12)
    assert estimate_d(X, y, seed=5) == auto.d_used
    assert projection_distance(auto.basis, truth) < 0.3


def test_two_directions():
    rng = np.random.default_rng(4)
    X = rng.standard_normal((15, 800))
    y = X[0] / (0.5 + (X[1] + 1.5) ** 2) + 0.1 * rng.standard_normal(800)
    est = lasso_sir(X, y, d=2, seed=1)
    truth = np.zeros((15, 2))
    truth[0, 0] = truth[1, 1] = 1.0
    assert est.B_hat.shape == (15, 2)
    assert projection_distance(est.basis, truth) < 0.5


@pytest.mark.parametrize("method", ["lasso-sir", "dt-sir", "matrix-lasso"])
def test_basis_orthonormal_and_adjusted_nonnegative(method):
    X, y, _ = single_index(seed=5)
    fit = {"lasso-sir": lasso_sir, "dt-sir": dt_sir, "matrix-lasso": matrix_lasso}[method]
    est = fit(X, y, d=2)
    U = est.basis
    assert U.shape[1] <= est.d_used
    assert np.max(np.abs(U.T @ U - np.eye(U.shape[1]))) <= 1e-8
    assert np.all(est.adjusted_eigenvalues >= 0)


def test_degenerate_direction_raises():
    rng = np.random.default_rng(6)
    X = rng.standard_normal((4, 60))
    y = np.repeat([0.0, 1.0], 30)
    with pytest.raises(DegenerateSpectrumError) as info:
        lasso_sir(X, y, H=None, d=2, discrete=True)
    assert info.value.direction == 2


def test_discrete_defaults_to_levels_minus_one():
    rng = np.random.default_rng(7)
    X = rng.standard_normal((10, 300))
    y = (X[0] > 0).astype(float) + (X[1] > 0.5)
    est = lasso_sir(X, y, H=None, discrete=True)
    assert est.d_used == 2
    with pytest.raises(ValueError):
        lasso_sir(X, y, H=5, discrete=True)


def test_mu_theory_uses_formula():
    X, y, _ = single_index(seed=8)
    est = lasso_sir(X, y, d=1, mu_theory=0.5)
    p, n = X.shape
    assert est.mu_used[0] == pytest.approx(0.5 * np.sqrt(np.log(p) / (n * est.eigenvalues[0])))


def test_two_means_injected_adjusted_eigenvalues():
    assert two_means_split([5.0, 4.8, 0.1, 0.2, 0.15]) == 2


def test_estimate_d_uses_two_means_on_adjusted(monkeypatch):
    X, y, _ = single_index(seed=9)
    seen = {}

    def spy(values):
        seen["values"] = np.array(values)
        return two_means_split(values)

    monkeypatch.setattr(estimators, "two_means_split", spy)
    d = estimate_d(X, y, H=10)
    assert seen["values"].size == 10
    assert d == two_means_split(seen["values"])


def test_screen_diagonal_example():
    assert screen_diagonal([0.9, 0.01, 0.8, 0.02], 2).tolist() == [0, 2]


def test_default_screen_size():
    assert default_screen_size(1000, 100) == int(1000 / (4 * np.log(1000)))
    assert default_screen_size(1000, 10) == 10


def test_dt_sir_without_screening_is_plain_sir():
    rng = np.random.default_rng(10)
    X = rng.standard_normal((5, 300))
    y = X[0] + 0.3 * rng.standard_normal(300)
    est = dt_sir(X, y, H=10, d=1)
    Xc, design = slice_design(X, y, 10)
    eta = sir_spectrum(design.slice_means, 1).eigenvectors
    plain = np.linalg.solve(Xc @ Xc.T / 300, eta)
    assert_allclose(est.B_hat, plain, atol=1e-10)
    assert est.selected.tolist() == list(range(5))


def test_dt_sir_screens_to_strong_rows():
    X, y, _ = single_index(n=500, p=200, seed=11)
    est = dt_sir(X, y, d=1, screen_size=10)
    assert est.selected.size == 10
    assert {0, 1} <= set(est.selected.tolist())
    outside = np.setdiff1d(np.arange(200), est.selected)
    assert np.all(est.B_hat[outside] == 0)


def test_dt_sir_rejects_large_screen():
    X, y, _ = single_index(n=50, p=100, seed=12)
    with pytest.raises(ValueError):
        dt_sir(X, y, H=5, screen_size=50)


def test_matrix_lasso_mu_zero_is_linear_solve():
    rng = np.random.default_rng(13)
    X = rng.standard_normal((6, 100))
    A = X @ X.T / 100
    eta = rng.standard_normal(6)
    assert_allclose(matrix_lasso_solve(A, eta, 0.0, tol=1e-12), np.linalg.solve(A, eta),
                    atol=1e-6)


def test_matrix_lasso_zero_target():
    rng = np.random.default_rng(14)
    X = rng.standard_normal((4, 50))
    assert_array_equal(matrix_lasso_solve(X @ X.T / 50, np.zeros(4), 0.3), 0.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 8), st.floats(0.0, 2.0))
def test_matrix_lasso_kkt(seed, p, mu):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((p, 40))
    A = X @ X.T / 40
    eta = rng.standard_normal(p)
    beta = matrix_lasso_solve(A, eta, mu, tol=1e-10)
    g = 2 * A @ (eta - A @ beta)
    zero = beta == 0
    scale = 1 + np.abs(g).max()
    assert np.all(np.abs(g[zero]) <= mu + 1e-6 * scale)
    assert_allclose(g[~zero], mu * np.sign(beta[~zero]), atol=1e-6 * scale)


def test_matrix_lasso_recovers_sparse_direction():
    X, y, truth = single_index(n=600, p=30, seed=15)
    est = matrix_lasso(X, y, d=1)
    assert projection_distance(est.basis, truth) < 0.4
    assert est.mu_used[0] >= 0


def test_truncate_keeps_leading_columns():
    X, y, _ = single_index(seed=16)
    full = lasso_sir(X, y, d=3, seed=2)
    t = full.truncate(1)
    assert_array_equal(t.B_hat, full.B_hat[:, :1])
    assert_allclose(t.basis, orthonormal_basis(full.B_hat[:, :1]))
