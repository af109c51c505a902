import numpy as np
import pytest

from sparsedrift.errors import DegenerateCoordinate
from sparsedrift.solvers import (
    Fit,
    SolveOptions,
    certificate_threshold,
    kkt_residual,
    lambda_max,
    penalized_objective,
    ridge_solve,
    soft_threshold,
    weighted_lasso,
)
from sparsedrift.stats import SuffStats

AXIS = np.linspace(-5.0, 5.0, 10001)


def grid_search_2d(C, g, lam, w):
    """Exhaustive minimization over the 1e-3 grid on [-5, 5]^2."""
    f1 = g[0] * AXIS + 0.5 * C[0, 0] * AXIS**2 + lam * w[0] * np.abs(AXIS)
    f2 = g[1] * AXIS + 0.5 * C[1, 1] * AXIS**2 + lam * w[1] * np.abs(AXIS)
    best_val, best_pt = np.inf, None
    for i in range(0, AXIS.size, 500):
        t1 = AXIS[i : i + 500]
        val = f1[i : i + 500][:, None] + f2[None, :] + C[0, 1] * t1[:, None] * AXIS[None, :]
        k = np.unravel_index(np.argmin(val), val.shape)
        if val[k] < best_val:
            best_val = val[k]
            best_pt = (t1[k[0]], AXIS[k[1]])
    return np.array(best_pt)


def random_spd_stats(rng, p, diag_boost=0.1):
    a = rng.normal(size=(p, p))
    return SuffStats(C=a @ a.T / p + diag_boost * np.eye(p), g=rng.normal(size=p), T=1.0)


def test_soft_threshold_examples():
    assert soft_threshold(3.0, 1.0) == 2.0
    assert soft_threshold(-0.5, 1.0) == 0.0
    assert soft_threshold(-2.0, 0.5) == -1.5
    with pytest.raises(ValueError):
        soft_threshold(1.0, -0.1)


def test_diagonal_problems_solve_in_closed_form():
    st = SuffStats(C=np.eye(2), g=np.array([-3.0, -0.5]), T=1.0)
    fit = weighted_lasso(st, 1.0, np.ones(2))
    assert np.allclose(fit.theta, [2.0, 0.0], atol=1e-12)
    st2 = SuffStats(C=np.diag([2.0, 2.0]), g=np.array([-4.0, 1.0]), T=1.0)
    fit2 = weighted_lasso(st2, 2.0, np.array([1.0, 2.0]))
    assert np.allclose(fit2.theta, [1.0, 0.0], atol=1e-12)


def test_matches_grid_search_on_small_instances():
    rng = np.random.default_rng(42)
    for _ in range(5):
        a = rng.normal(size=(2, 2))
        C = a @ a.T + 0.3 * np.eye(2)
        g = -C @ rng.uniform(-3, 3, 2)
        lam = rng.uniform(0.05, 1.0)
        w = rng.uniform(0.5, 2.0, 2)
        st = SuffStats(C=C, g=g, T=1.0)
        fit = weighted_lasso(st, lam, w)
        assert fit.converged
        assert np.max(np.abs(fit.theta - grid_search_2d(C, g, lam, w))) <= 2e-3


def test_kkt_residual_examples():
    st = SuffStats(C=np.eye(2), g=np.array([-3.0, -0.5]), T=1.0)
    fit = weighted_lasso(st, 1.0, np.ones(2))
    assert kkt_residual(st, fit) <= 1e-12
    # lambda = 0 stationarity at the exact solve
    st2 = SuffStats(C=np.diag([2.0, 3.0]), g=np.array([-2.0, 3.0]), T=1.0)
    exact = ridge_solve(st2)
    assert kkt_residual(st2, exact) <= 1e-12
    # perturbing one coordinate raises the residual by about C_jj * 1e-3
    bumped = Fit(
        theta=exact.theta + np.array([0.0, 1e-3]),
        method="mle",
        lam=0.0,
        weights=np.ones(2),
        kkt_residual=0.0,
        iterations=0,
        converged=True,
    )
    assert kkt_residual(st2, bumped) == pytest.approx(3.0 * 1e-3, rel=1e-6)


def test_ridge_solve_examples():
    st = SuffStats(C=np.eye(2), g=np.array([-1.0, -2.0]), T=1.0)
    assert np.allclose(ridge_solve(st).theta, [1.0, 2.0], atol=1e-12)
    degenerate = SuffStats(C=np.diag([1.0, 0.0]), g=np.array([-1.0, 0.0]), T=1.0)
    fit = ridge_solve(degenerate)
    assert np.allclose(fit.theta, [1.0, 0.0], atol=1e-6)
    rng = np.random.default_rng(3)
    for _ in range(10):
        st3 = random_spd_stats(rng, 6)
        fit3 = ridge_solve(st3)
        assert np.max(np.abs(st3.C @ fit3.theta + st3.g)) <= 1e-8 * np.max(np.abs(st3.g))


def test_lambda_max_examples_and_property():
    st = SuffStats(C=np.eye(2), g=np.array([-2.0, 1.0]), T=1.0)
    assert lambda_max(st, np.ones(2)) == 2.0
    assert lambda_max(st, np.array([4.0, 1.0])) == 1.0
    with pytest.raises(ValueError):
        lambda_max(st, np.array([np.inf, np.inf]))
    rng = np.random.default_rng(7)
    for _ in range(10):
        st2 = random_spd_stats(rng, 4)
        w = rng.uniform(0.5, 2.0, 4)
        fit = weighted_lasso(st2, lambda_max(st2, w) * 1.0001, w)
        assert np.array_equal(fit.theta, np.zeros(4))


def test_objective_is_monotone_across_sweeps():
    rng = np.random.default_rng(11)
    a = rng.normal(size=(8, 8))
    st = SuffStats(C=a @ a.T + 1e-4 * np.eye(8), g=3 * rng.normal(size=8), T=1.0)
    w = rng.uniform(0.5, 2.0, 8)
    prev = np.inf
    for k in range(1, 30):
        fit = weighted_lasso(st, 0.3, w, SolveOptions(max_iter=k))
        obj = penalized_objective(st, fit.theta, 0.3, w)
        assert obj <= prev + 1e-12 * (1.0 + abs(prev))
        prev = obj


def test_certificate_on_random_instances():
    rng = np.random.default_rng(100)
    for _ in range(30):
        p = int(rng.integers(2, 20))
        st = random_spd_stats(rng, p)
        w = rng.uniform(0.5, 2.0, p)
        lam = rng.uniform(0.0, 1.5) * lambda_max(st, w)
        fit = weighted_lasso(st, lam, w)
        assert fit.converged
        assert kkt_residual(st, fit) <= certificate_threshold(st)


def test_zero_lambda_agrees_with_ridge():
    rng = np.random.default_rng(13)
    st = random_spd_stats(rng, 5)
    cd = weighted_lasso(st, 0.0, np.ones(5))
    direct = ridge_solve(st)
    assert np.max(np.abs(cd.theta - direct.theta)) <= 1e-8


def test_adaptive_scaling_invariance():
    rng = np.random.default_rng(17)
    st = random_spd_stats(rng, 4)
    w = rng.uniform(0.5, 2.0, 4)
    ref = weighted_lasso(st, 0.4, w)
    for c in (0.1, 3.0, 250.0):
        other = weighted_lasso(st, 0.4 / c, c * w)
        assert np.max(np.abs(other.theta - ref.theta)) <= 1e-9


def test_pinned_coordinates_stay_zero():
    st = SuffStats(C=np.eye(3), g=np.array([-3.0, -10.0, -0.5]), T=1.0)
    fit = weighted_lasso(st, 1.0, np.array([1.0, np.inf, 2.0]))
    assert np.allclose(fit.theta, [2.0, 0.0, 0.0], atol=1e-12)
    assert kkt_residual(st, fit) <= 1e-12  # pinned coordinate is excluded


def test_degenerate_coordinate_errors():
    st = SuffStats(C=np.diag([1.0, 0.0]), g=np.array([-1.0, -2.0]), T=1.0)
    with pytest.raises(DegenerateCoordinate):
        weighted_lasso(st, 0.0, np.ones(2))
    # with a penalty exceeding the gradient the flat coordinate pins to zero
    ok = weighted_lasso(st, 3.0, np.ones(2))
    assert ok.theta[1] == 0.0
    with pytest.raises(DegenerateCoordinate):
        weighted_lasso(st, 1.0, np.ones(2))  # penalty 1 < |g_1| = 2: unbounded


def test_non_convergence_returns_best_iterate():
    rng = np.random.default_rng(23)
    a = rng.normal(size=(10, 10))
    st = SuffStats(C=a @ a.T + 1e-6 * np.eye(10), g=rng.normal(size=10), T=1.0)
    fit = weighted_lasso(st, 0.01, np.ones(10), SolveOptions(max_iter=1))
    assert not fit.converged
    assert np.all(np.isfinite(fit.theta))
    assert fit.iterations == 1


def test_warm_start_reaches_same_solution():
    rng = np.random.default_rng(29)
    st = random_spd_stats(rng, 6)
    cold = weighted_lasso(st, 0.2, np.ones(6))
    warm = weighted_lasso(st, 0.2, np.ones(6), theta_init=cold.theta)
    assert np.max(np.abs(warm.theta - cold.theta)) <= 1e-10


def test_solve_options_validation():
    with pytest.raises(ValueError):
        SolveOptions(max_iter=0)
    with pytest.raises(ValueError):
        SolveOptions(tol=0.0)
    with pytest.raises(ValueError):
        weighted_lasso(SuffStats(C=np.eye(1), g=np.ones(1), T=1.0), -0.1, np.ones(1))
