"""Acquisition tests: Monte-Carlo oracle for Thompson draws, printed-form
checks for expected improvement and the confidence-width schedule."""

import numpy as np
import pytest

from boap.acquisition import (
    CandidateGrid,
    expected_improvement,
    make_grid,
    thompson_sample,
    ucb_beta,
)
from boap.gp import gp_fit, gp_predict
from boap.kernels import ArdKernelParams


def small_posterior(noise=0.1, seed=0, n=5):
    rng = np.random.default_rng(seed)
    X = rng.random((n, 1))
    y = rng.standard_normal(n)
    return gp_fit(X, y, ArdKernelParams([0.4], 1.0, noise))


class TestCandidateGrid:
    def test_points_inside_unit_cube(self):
        grid = make_grid(3, 200, seed=42)
        assert grid.points.shape == (200, 3)
        assert np.all(grid.points >= 0) and np.all(grid.points <= 1)

    def test_same_seed_reproduces_points(self):
        g1 = make_grid(2, 50, seed=7)
        g2 = make_grid(2, 50, seed=7)
        np.testing.assert_array_equal(g1.points, g2.points)

    def test_different_seed_differs(self):
        g1 = make_grid(2, 50, seed=7)
        g2 = make_grid(2, 50, seed=8)
        assert not np.array_equal(g1.points, g2.points)

    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError):
            CandidateGrid(points=np.zeros((0, 2)))


class TestThompsonSample:
    def test_singleton_grid_matches_marginal(self):
        post = small_posterior()
        grid = CandidateGrid(points=np.array([[0.3]]))
        ts = thompson_sample(post, grid, seed=1)
        assert ts.argmax_idx == 0
        assert ts.values.shape == (1,)

    def test_singleton_monte_carlo_mean(self):
        # the empirical mean over many seeds must approach the posterior
        # mean within 3 sigma / sqrt(N)
        post = small_posterior()
        xq = np.array([[0.3]])
        mu, var = gp_predict(post, xq)
        draws = np.array(
            [thompson_sample(post, CandidateGrid(points=xq), seed=s).values[0] for s in range(10_000)]
        )
        assert abs(draws.mean() - mu[0]) <= 3.0 * np.sqrt(var[0]) / 100.0
        assert draws.std() == pytest.approx(np.sqrt(var[0]), rel=0.05)

    def test_degenerate_posterior_returns_mean(self):
        # noise-free fit queried at the training points: the joint
        # covariance is numerically zero, so the draw is the mean itself
        rng = np.random.default_rng(3)
        X = rng.random((4, 1))
        y = rng.standard_normal(4)
        post = gp_fit(X, y, ArdKernelParams([0.4], 1.0, 1e-13))
        grid = CandidateGrid(points=X)
        ts = thompson_sample(post, grid, seed=5)
        mu, _ = gp_predict(post, grid.points)
        np.testing.assert_allclose(ts.values, mu, atol=1e-8)

    def test_deterministic_given_seed(self):
        post = small_posterior()
        grid = make_grid(1, 30, seed=2)
        a = thompson_sample(post, grid, seed=9)
        b = thompson_sample(post, grid, seed=9)
        np.testing.assert_array_equal(a.values, b.values)
        assert a.argmax_idx == b.argmax_idx

    def test_argmax_invariant_under_increasing_affine(self):
        post = small_posterior()
        grid = make_grid(1, 40, seed=4)
        ts = thompson_sample(post, grid, seed=11)
        transformed = 3.7 * ts.values + 2.0
        assert int(np.argmax(transformed)) == ts.argmax_idx

    def test_tie_breaks_to_lowest_index(self):
        vals = np.array([1.0, 5.0, 5.0, 2.0])
        assert int(np.argmax(vals)) == 1  # documented tie rule


class TestExpectedImprovement:
    def test_zero_deviation_gives_zero(self):
        # noise-free interpolation makes sd ~ 0 at a training point
        rng = np.random.default_rng(5)
        X = rng.random((4, 1))
        y = rng.standard_normal(4)
        post = gp_fit(X, y, ArdKernelParams([0.4], 1.0, 0.0))
        ei = expected_improvement(post, X[:1], best_y=float(y.max()))
        assert ei[0] == 0.0

    def test_zero_gap_hand_value(self):
        # mu - best = 0 with sd 1 leaves exactly phi(0)
        post = small_posterior(noise=0.05, seed=6)
        xq = np.array([[60.0]])  # far away: mu = 0, sd = 1
        ei = expected_improvement(post, xq, best_y=0.0)
        assert ei[0] == pytest.approx(1.0 / np.sqrt(2 * np.pi), abs=1e-10)
        assert ei[0] == pytest.approx(0.39894, abs=5e-6)

    def test_nonnegative_on_fuzz(self):
        rng = np.random.default_rng(7)
        post = small_posterior(seed=8)
        for _ in range(1000):
            xq = rng.uniform(-2, 3, size=(1, 1))
            best = float(rng.standard_normal())
            assert expected_improvement(post, xq, best)[0] >= 0.0

    def test_incumbent_with_vanishing_sd_tends_to_zero(self):
        rng = np.random.default_rng(9)
        X = rng.random((5, 1))
        y = rng.standard_normal(5)
        best = float(y.max())
        x_best = X[int(np.argmax(y))][None, :]
        values = []
        for noise in (1e-2, 1e-4, 1e-6, 1e-8):
            post = gp_fit(X, y, ArdKernelParams([0.4], 1.0, noise))
            values.append(expected_improvement(post, x_best, best)[0])
        assert values[-1] < 1e-4
        assert all(a >= b - 1e-12 for a, b in zip(values, values[1:]))


class TestUcbBeta:
    def test_hand_value(self):
        expected = 2.0 * np.log(np.pi**2 / 0.3)
        assert ucb_beta(1, 1, 0.1) == pytest.approx(expected, abs=1e-12)
        assert ucb_beta(1, 1, 0.1) == pytest.approx(6.987, abs=5e-4)

    def test_monotone_in_t(self):
        vals = [ucb_beta(t, 3, 0.1) for t in range(1, 40)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_dimension_irrelevant_at_t_one(self):
        assert ucb_beta(1, 1, 0.1) == pytest.approx(ucb_beta(1, 2, 0.1), abs=1e-12)

    def test_domain_validation(self):
        with pytest.raises(ValueError):
            ucb_beta(1, 1, 0.0)
        with pytest.raises(ValueError):
            ucb_beta(1, 1, 1.0)
        with pytest.raises(ValueError):
            ucb_beta(0, 1, 0.5)
