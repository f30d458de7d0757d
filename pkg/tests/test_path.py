"""Homotopy path solver against proximal-gradient and closed-form oracles."""

import numpy as np
import pytest

from credsel.data import Dataset, PosteriorSummary, standardize
from credsel.path import (WEIGHT_CAP, _PlainLasso, build_problem, check_kkt,
                          credible_selection, lasso_baseline, select_bic,
                          solve_path)


def ista_oracle(x, y, lam, iters=100_000):
    """Proximal gradient for min ||y - X b||^2 + lam ||b||_1."""
    step = 0.5 / np.linalg.norm(x, 2) ** 2
    b = np.zeros(x.shape[1])
    for _ in range(iters):
        z = b - step * 2.0 * (x.T @ (x @ b - y))
        b = np.sign(z) * np.maximum(np.abs(z) - step * lam, 0.0)
    return b


def objective(x, y, lam, b):
    r = y - x @ b
    return float(r @ r + lam * np.abs(b).sum())


class TestBuildProblem:
    def test_identity_covariance(self):
        s = PosteriorSummary(beta_mean=np.array([1.0, 2.0]), beta_cov=np.eye(2),
                             sigma2_mean=1.0, n_draws=100)
        prob = build_problem(s)
        assert np.allclose(prob.sigma_inv_chol, np.eye(2))

    def test_diagonal_covariance(self):
        s = PosteriorSummary(beta_mean=np.array([1.0, 1.0]),
                             beta_cov=np.diag([4.0, 1.0]),
                             sigma2_mean=1.0, n_draws=100)
        prob = build_problem(s)
        assert np.allclose(prob.sigma_inv_chol, np.diag([0.5, 1.0]))

    def test_random_spd_reconstruction(self):
        gen = np.random.default_rng(0)
        a = gen.standard_normal((5, 5))
        sigma = a @ a.T + 0.5 * np.eye(5)
        s = PosteriorSummary(beta_mean=gen.standard_normal(5), beta_cov=sigma,
                             sigma2_mean=1.0, n_draws=100)
        ell = build_problem(s).sigma_inv_chol
        assert np.abs(ell.T @ ell @ sigma - np.eye(5)).max() < 1e-8

    def test_weight_clamping(self):
        s = PosteriorSummary(beta_mean=np.array([2.0, 0.0, 1e-12]),
                             beta_cov=np.eye(3), sigma2_mean=1.0, n_draws=100)
        w = build_problem(s).weights
        assert w[0] == 0.25
        assert w[1] == WEIGHT_CAP and w[2] == WEIGHT_CAP

    def test_rank_deficient_covariance_jittered(self):
        gen = np.random.default_rng(1)
        low = gen.standard_normal((6, 2))
        s = PosteriorSummary(beta_mean=gen.standard_normal(6),
                             beta_cov=low @ low.T, sigma2_mean=1.0, n_draws=100)
        prob = build_problem(s)  # must not raise
        assert np.all(np.isfinite(prob.sigma_inv_chol))


class TestSolvePath:
    def test_path_ends_at_unpenalized_optimum(self):
        gen = np.random.default_rng(2)
        s = PosteriorSummary(beta_mean=gen.standard_normal(4),
                             beta_cov=np.eye(4) + 0.3, sigma2_mean=1.0,
                             n_draws=100)
        path = solve_path(build_problem(s))
        assert path.steps[-1].lam == 0.0
        assert np.abs(path.steps[-1].beta - s.beta_mean).max() < 1e-8

    def test_lambda_strictly_decreasing(self):
        gen = np.random.default_rng(3)
        prob = _PlainLasso(design=gen.standard_normal((10, 6)),
                           response=gen.standard_normal(10))
        lams = [s.lam for s in solve_path(prob).steps]
        assert all(a > b for a, b in zip(lams, lams[1:]))

    def test_identity_covariance_orders_by_magnitude(self):
        s = PosteriorSummary(beta_mean=np.array([1.0, 0.5, 0.1]),
                             beta_cov=np.eye(3), sigma2_mean=1.0, n_draws=100)
        assert solve_path(build_problem(s)).entry_order() == [0, 1, 2]

    def test_matches_proximal_gradient_between_knots(self):
        gen = np.random.default_rng(4)
        x = gen.standard_normal((12, 7))
        y = gen.standard_normal(12) * 2
        prob = _PlainLasso(design=x, response=y)
        path = solve_path(prob)
        lams = [s.lam for s in path.steps]
        for lam in np.linspace(lams[0] * 0.95, 1e-3, 9):
            k = next(i for i, s in enumerate(path.steps) if s.lam <= lam)
            hi, lo = path.steps[k - 1], path.steps[k]
            t = (hi.lam - lam) / (hi.lam - lo.lam)
            b_path = (1 - t) * hi.beta + t * lo.beta
            b_orc = ista_oracle(x, y, lam)
            assert abs(objective(x, y, lam, b_path)
                       - objective(x, y, lam, b_orc)) < 1e-6

    def test_kkt_on_random_problems(self):
        gen = np.random.default_rng(5)
        drops = 0
        for _ in range(100):
            m = int(gen.integers(4, 15))
            p = int(gen.integers(2, 11))
            x = gen.standard_normal((m, p)) + gen.standard_normal((m, 1))
            y = gen.standard_normal(m) * 2
            prob = _PlainLasso(design=x, response=y)
            path = solve_path(prob)
            for s in path.steps:
                assert check_kkt(prob, s.lam, s.beta, tol=1e-6)
                drops += s.event == "drop"
        assert drops > 0  # the suite must actually exercise drop handling

    def test_orthonormal_knots_and_soft_threshold(self):
        gen = np.random.default_rng(6)
        q, _ = np.linalg.qr(gen.standard_normal((8, 8)))
        y = gen.standard_normal(8) * 3
        path = solve_path(_PlainLasso(design=q, response=y))
        knots = sorted((s.lam for s in path.steps if s.event == "enter"),
                       reverse=True)
        assert np.allclose(knots, sorted(2 * np.abs(q.T @ y), reverse=True))
        # soft thresholding by lam/2 at an interior knot
        corr = q.T @ y
        for s in path.steps[1:]:
            expect = np.sign(corr) * np.maximum(np.abs(corr) - s.lam / 2.0, 0.0)
            assert np.abs(s.beta - expect).max() < 1e-8

    def test_ordering_invariant_under_objective_scaling(self):
        gen = np.random.default_rng(7)
        sigma = np.eye(5) + 0.4
        mean = gen.standard_normal(5)
        base = PosteriorSummary(beta_mean=mean, beta_cov=sigma,
                                sigma2_mean=1.0, n_draws=100)
        scaled = PosteriorSummary(beta_mean=mean, beta_cov=sigma / 7.0,
                                  sigma2_mean=1.0, n_draws=100)
        assert (solve_path(build_problem(base)).entry_order()
                == solve_path(build_problem(scaled)).entry_order())

    def test_max_steps_truncation_flagged(self):
        gen = np.random.default_rng(8)
        prob = _PlainLasso(design=gen.standard_normal((20, 12)),
                           response=gen.standard_normal(20))
        path = solve_path(prob, max_steps=2)
        assert path.truncated

    def test_full_ordering_pads_missing(self):
        s = PosteriorSummary(beta_mean=np.array([1.0, 0.5, 0.1]),
                             beta_cov=np.eye(3), sigma2_mean=1.0, n_draws=100)
        path = solve_path(build_problem(s))
        order, partial = path.full_ordering(3)
        assert sorted(order) == [0, 1, 2]
        assert not partial


class TestSelectBic:
    def test_perfect_single_predictor(self):
        gen = np.random.default_rng(9)
        x = gen.standard_normal((30, 4))
        y = 2.0 * x[:, 0]
        d = standardize(Dataset(y=y, x=x))
        path = lasso_baseline(d)
        choice = select_bic(path, d)
        assert choice.active == (0,)

    def test_pure_noise_selects_empty(self):
        gen = np.random.default_rng(10)
        x = gen.standard_normal((40, 5))
        y = gen.standard_normal(40) * 0.01
        d = standardize(Dataset(y=y, x=x))
        choice = select_bic(lasso_baseline(d), d)
        assert choice.active == ()

    def test_max_size_respected(self):
        gen = np.random.default_rng(11)
        x = gen.standard_normal((50, 10))
        y = x @ gen.standard_normal(10) + 0.1 * gen.standard_normal(50)
        d = standardize(Dataset(y=y, x=x))
        choice = select_bic(lasso_baseline(d), d, max_size=3)
        assert len(choice.active) < 3

    def test_end_to_end_recovers_support(self):
        from credsel.gibbs import McmcConfig, gibbs_normal, summarize
        gen = np.random.default_rng(12)
        x = gen.standard_normal((80, 8))
        beta = np.zeros(8)
        beta[[1, 5]] = [2.0, -1.5]
        y = x @ beta + gen.standard_normal(80)
        d = standardize(Dataset(y=y, x=x))
        draws = gibbs_normal(d, 1.0, cfg=McmcConfig(n_iter=3000, n_burn=1000, seed=9))
        choice = credible_selection(summarize(draws), d)
        assert choice.active == (1, 5)


class TestLassoBaseline:
    def test_dominant_variable_enters_first(self):
        gen = np.random.default_rng(13)
        q, _ = np.linalg.qr(gen.standard_normal((20, 6)))
        y = 3.0 * q[:, 0] + 0.01 * gen.standard_normal(20)
        d = standardize(Dataset(y=y, x=q))
        assert lasso_baseline(d).entry_order()[0] == 0

    def test_truncates_at_sample_size(self):
        gen = np.random.default_rng(14)
        x = gen.standard_normal((8, 25))
        y = gen.standard_normal(8)
        d = standardize(Dataset(y=y, x=x))
        path = lasso_baseline(d)
        assert max(len(s.active) for s in path.steps) <= 8

    def test_requires_standardized(self):
        gen = np.random.default_rng(15)
        d = Dataset(y=gen.standard_normal(10) + 3,
                    x=gen.standard_normal((10, 3)))
        with pytest.raises(ValueError, match="standardized"):
            lasso_baseline(d)
