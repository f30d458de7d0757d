"""Gibbs samplers for the normal, Laplace, and Dirichlet-Laplace priors.

Every sampler shares the sweep skeleton: (i) error variance, (ii) regression
coefficients from their conditional Gaussian, then the latent scale updates
specific to the prior. The coefficient draw switches to the O(n^2 p)
auxiliary-variable sampler once p >= 4n, so the p = 1000, n = 60 settings
stay tractable.

Laplace prior latents follow the usual exponential scale-mixture of the
double exponential: beta_j | sigma^2, t_j ~ N(0, sigma^2 t_j),
t_j ~ Exp(lambda^2 / 2), with the gamma hyperprior (when requested) placed
on lambda^2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular
from scipy.special import gammaln

from .data import (Dataset, DLFixed, DLHyperGrid, LaplaceFixed, LaplaceHyper,
                   NormalFixed, NormalHyper, PosteriorSummary, PriorSpec)
from .distributions import (BETA_FLOOR, SCALE_FLOOR, gig_draws,
                            inverse_gaussian_draws)
from .rng import RngState

FAST_SAMPLER_RATIO = 4  # use the n^2 p coefficient sampler once p >= 4n


@dataclass(frozen=True)
class McmcConfig:
    n_iter: int = 15000
    n_burn: int = 5000
    thin: int = 1
    seed: int = 0
    stream: int = 0

    def __post_init__(self):
        if self.n_burn >= self.n_iter:
            raise ValueError("n_burn must be below n_iter")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if self.n_kept < 100:
            raise ValueError("need at least 100 kept iterations")

    @property
    def n_kept(self) -> int:
        return (self.n_iter - self.n_burn) // self.thin

    def rng(self) -> RngState:
        return RngState(self.seed, self.stream)


@dataclass
class DLState:
    beta: np.ndarray
    sigma2: float
    psi: np.ndarray
    phi: np.ndarray
    tau: float

    def check(self):
        assert abs(self.phi.sum() - 1.0) < 1e-12
        assert self.sigma2 > 0 and self.tau > 0 and np.all(self.psi > 0)


@dataclass
class DrawMatrix:
    draws: np.ndarray
    sigma2_draws: np.ndarray
    hyper_draws: Optional[np.ndarray] = None  # a (DL grid) or lambda^2 (Laplace hyper)


class _Keeper:
    def __init__(self, cfg: McmcConfig, p: int, track_hyper: bool = False):
        self.cfg = cfg
        self.draws = np.empty((cfg.n_kept, p))
        self.sigma2 = np.empty(cfg.n_kept)
        self.hyper = np.empty(cfg.n_kept) if track_hyper else None
        self.k = 0

    def offer(self, it: int, beta, sigma2, hyper=None):
        cfg = self.cfg
        if it < cfg.n_burn or (it - cfg.n_burn) % cfg.thin:
            return
        if self.k < cfg.n_kept:
            self.draws[self.k] = beta
            self.sigma2[self.k] = sigma2
            if self.hyper is not None:
                self.hyper[self.k] = hyper
            self.k += 1

    def result(self) -> DrawMatrix:
        return DrawMatrix(self.draws[: self.k], self.sigma2[: self.k],
                          None if self.hyper is None else self.hyper[: self.k])


def _draw_beta_direct(xtx, xty, s_inv_diag, sigma2, gen):
    """beta ~ N(V X'y, sigma^2 V), V = (X'X + S^-1)^-1, via Cholesky solve."""
    p = xtx.shape[0]
    prec = xtx + np.diag(s_inv_diag)
    jitter = 0.0
    for _ in range(4):
        try:
            c, low = cho_factor(prec + jitter * np.eye(p), lower=True)
            break
        except np.linalg.LinAlgError:
            jitter = max(jitter * 10, 1e-10 * np.trace(prec) / p)
    else:
        raise RuntimeError("coefficient precision matrix not factorizable after jitter")
    mu = cho_solve((c, low), xty)
    z = gen.standard_normal(p)
    # cov sigma^2 (L L')^-1: solve L' w = z
    w = solve_triangular(c, z, lower=True, trans="T")
    return mu + np.sqrt(sigma2) * w


def _draw_beta_fast(x, y, s_diag, sigma2, gen):
    """Same conditional via the auxiliary-variable identity, O(n^2 p)."""
    n, p = x.shape
    sigma = np.sqrt(sigma2)
    u = np.sqrt(s_diag) * gen.standard_normal(p)
    delta = gen.standard_normal(n)
    v = x @ u + delta
    m = (x * s_diag) @ x.T + np.eye(n)
    try:
        c = cho_factor(m, lower=True)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError("auxiliary system not factorizable") from exc
    w = cho_solve(c, y / sigma - v)
    theta = u + s_diag * (x.T @ w)
    return sigma * theta


def _require_standardized(d: Dataset):
    if not d.standardized:
        raise ValueError("sampler requires a standardized Dataset")


def _sigma2_draw(a1, b1, n_terms, quad_form, gen):
    shape = a1 + n_terms / 2.0
    scale = b1 + quad_form / 2.0
    return scale / gen.gamma(shape)


def gibbs_dl(d: Dataset, a: float, sigma2_prior=(0.001, 0.001),
             cfg: McmcConfig = McmcConfig()) -> DrawMatrix:
    """Dirichlet-Laplace sampler with fixed concentration a."""
    if not 0 < a <= 0.5:
        raise ValueError("DL concentration must lie in (0, 1/2]")
    return _gibbs_dl_impl(d, np.array([a]), sigma2_prior, cfg).result()


def gibbs_dl_hypergrid(d: Dataset, grid: DLHyperGrid, sigma2_prior=(0.001, 0.001),
                       cfg: McmcConfig = McmcConfig()) -> DrawMatrix:
    """Dirichlet-Laplace sampler with a discrete uniform prior on a."""
    return _gibbs_dl_impl(d, grid.points(), sigma2_prior, cfg).result()


def _gibbs_dl_impl(d: Dataset, a_grid: np.ndarray, sigma2_prior, cfg: McmcConfig) -> _Keeper:
    _require_standardized(d)
    x, y = d.x, d.y
    n, p = x.shape
    a1, b1 = sigma2_prior
    rng = cfg.rng()
    gen = rng.gen
    fast = p >= FAST_SAMPLER_RATIO * n
    xtx = None if fast else x.T @ x
    xty = x.T @ y

    track = a_grid.size > 1
    log_half = np.log(0.5)
    grid_gammaln = gammaln(a_grid)

    a = float(a_grid[len(a_grid) // 2]) if track else float(a_grid[0])
    beta = np.zeros(p)
    sigma2 = 1.0
    psi = np.ones(p)
    phi = np.full(p, 1.0 / p)
    tau = 1.0

    keep = _Keeper(cfg, p, track_hyper=track)
    for it in range(cfg.n_iter):
        s_diag = np.maximum(psi * (phi * tau) ** 2, 1e-300)

        # (i) sigma^2
        resid = y - x @ beta
        quad = beta @ (beta / s_diag) + resid @ resid
        sigma2 = _sigma2_draw(a1, b1, n + p, quad, gen)
        sigma = np.sqrt(sigma2)

        # (ii) beta
        if fast:
            beta = _draw_beta_fast(x, y, s_diag, sigma2, gen)
        else:
            beta = _draw_beta_direct(xtx, xty, 1.0 / s_diag, sigma2, gen)
        abs_beta = np.maximum(np.abs(beta), BETA_FLOOR)

        # Steps (iii)-(v) are one blocked draw of (psi, tau, phi) | beta, sigma^2
        # factored as pi(psi|phi,tau,...) pi(tau|phi,...) pi(phi|...); a valid
        # composition draws phi first, then tau, then psi.

        # (v) phi via normalized giG draws
        t = gig_draws(2.0 * abs_beta / sigma, 1.0, a - 1.0, rng)
        total = t.sum()
        if not np.isfinite(total) or total <= 0.0:
            t = t / max(t.max(), np.finfo(float).tiny)
            total = t.sum()
        phi = t / total
        phi = np.maximum(phi, 1e-300)
        phi /= phi.sum()

        # (iv) tau; raw |beta_j|/phi_j ratios are self-consistent (both scale
        # with phi_j), flooring either one separately inflates chi
        chi_tau = 2.0 * np.sum(np.abs(beta) / phi) / sigma
        tau = float(gig_draws(max(chi_tau, SCALE_FLOOR), 1.0, p * a - p, rng, size=1)[0])
        tau = max(tau, SCALE_FLOOR)

        # (iii) psi via reciprocal inverse Gaussian
        mu_j = np.maximum(sigma * phi * tau, SCALE_FLOOR) / abs_beta
        psi = 1.0 / inverse_gaussian_draws(mu_j, 1.0, rng)

        # grid update of a from the Dirichlet and gamma pieces of the prior
        if track:
            logp = (p * a_grid * log_half - p * grid_gammaln
                    + (p * a_grid - 1.0) * np.log(tau)
                    + (a_grid - 1.0) * np.sum(np.log(phi)))
            logp -= logp.max()
            w = np.exp(logp)
            w /= w.sum()
            a = float(a_grid[np.searchsorted(np.cumsum(w), gen.uniform())])

        keep.offer(it, beta, sigma2, a)
    return keep


def gibbs_laplace(d: Dataset, lambda_spec, sigma2_prior=(0.001, 0.001),
                  cfg: McmcConfig = McmcConfig()) -> DrawMatrix:
    """Bayesian-Lasso style sampler for the double exponential prior."""
    _require_standardized(d)
    if isinstance(lambda_spec, (int, float)):
        lambda_spec = LaplaceFixed(float(lambda_spec))
    if not isinstance(lambda_spec, (LaplaceFixed, LaplaceHyper)):
        raise TypeError(f"unsupported lambda spec: {lambda_spec!r}")
    hyper = isinstance(lambda_spec, LaplaceHyper)

    x, y = d.x, d.y
    n, p = x.shape
    a1, b1 = sigma2_prior
    rng = cfg.rng()
    gen = rng.gen
    fast = p >= FAST_SAMPLER_RATIO * n
    xtx = None if fast else x.T @ x
    xty = x.T @ y

    lam2 = 1.0 if hyper else lambda_spec.lam ** 2
    beta = np.zeros(p)
    sigma2 = 1.0
    t_scale = np.ones(p)  # latent per-coordinate variances

    keep = _Keeper(cfg, p, track_hyper=hyper)
    for it in range(cfg.n_iter):
        resid = y - x @ beta
        quad = beta @ (beta / t_scale) + resid @ resid
        sigma2 = _sigma2_draw(a1, b1, n + p, quad, gen)

        if fast:
            beta = _draw_beta_fast(x, y, t_scale, sigma2, gen)
        else:
            beta = _draw_beta_direct(xtx, xty, 1.0 / t_scale, sigma2, gen)

        abs_beta = np.maximum(np.abs(beta), BETA_FLOOR)
        mu_j = np.sqrt(lam2 * sigma2) / abs_beta
        t_scale = 1.0 / inverse_gaussian_draws(mu_j, lam2, rng)
        t_scale = np.maximum(t_scale, 1e-300)

        if hyper:
            lam2 = gen.gamma(lambda_spec.shape + p) / (lambda_spec.rate + t_scale.sum() / 2.0)

        keep.offer(it, beta, sigma2, lam2)
    return keep.result()


def gibbs_normal(d: Dataset, gamma_spec, sigma2_prior=(0.001, 0.001),
                 cfg: McmcConfig = McmcConfig()) -> DrawMatrix:
    """Conjugate sampler for the normal prior (fixed gamma or hyper variant)."""
    _require_standardized(d)
    if isinstance(gamma_spec, (int, float)):
        gamma_spec = NormalFixed(float(gamma_spec))
    if isinstance(gamma_spec, NormalFixed):
        return _gibbs_normal_fixed(d, gamma_spec.gamma, sigma2_prior, cfg)
    if isinstance(gamma_spec, NormalHyper):
        return _gibbs_normal_hyper(d, gamma_spec, sigma2_prior, cfg)
    raise TypeError(f"unsupported gamma spec: {gamma_spec!r}")


def _gibbs_normal_fixed(d: Dataset, gamma: float, sigma2_prior, cfg: McmcConfig) -> DrawMatrix:
    x, y = d.x, d.y
    n, p = x.shape
    a1, b1 = sigma2_prior
    rng = cfg.rng()
    gen = rng.gen
    fast = p >= FAST_SAMPLER_RATIO * n

    keep = _Keeper(cfg, p)
    sigma2 = 1.0
    if fast:
        s_diag = np.full(p, 1.0 / gamma)
        beta = np.zeros(p)
        for it in range(cfg.n_iter):
            resid = y - x @ beta
            quad = gamma * beta @ beta + resid @ resid
            sigma2 = _sigma2_draw(a1, b1, n + p, quad, gen)
            beta = _draw_beta_fast(x, y, s_diag, sigma2, gen)
            keep.offer(it, beta, sigma2)
        return keep.result()

    prec = x.T @ x + gamma * np.eye(p)
    c, low = cho_factor(prec, lower=True)
    mu = cho_solve((c, low), x.T @ y)
    beta = mu.copy()
    for it in range(cfg.n_iter):
        resid = y - x @ beta
        quad = gamma * beta @ beta + resid @ resid
        sigma2 = _sigma2_draw(a1, b1, n + p, quad, gen)
        z = gen.standard_normal(p)
        beta = mu + np.sqrt(sigma2) * solve_triangular(c, z, lower=True, trans="T")
        keep.offer(it, beta, sigma2)
    return keep.result()


def _gibbs_normal_hyper(d: Dataset, spec: NormalHyper, sigma2_prior, cfg: McmcConfig) -> DrawMatrix:
    # beta ~ N(0, sigma_b^2 I): the prior scale is NOT tied to the error variance
    x, y = d.x, d.y
    n, p = x.shape
    a1, b1 = sigma2_prior
    rng = cfg.rng()
    gen = rng.gen
    fast = p >= FAST_SAMPLER_RATIO * n
    xtx = None if fast else x.T @ x

    beta = np.zeros(p)
    sigma2 = 1.0
    sigma2_b = 1.0
    keep = _Keeper(cfg, p)
    for it in range(cfg.n_iter):
        resid = y - x @ beta
        sigma2 = _sigma2_draw(a1, b1, n, resid @ resid, gen)
        sigma2_b = (spec.scale + beta @ beta / 2.0) / gen.gamma(spec.shape + p / 2.0)

        sigma = np.sqrt(sigma2)
        if fast:
            # with unit sigma2 the auxiliary sampler yields a draw from
            # N(Q^-1 X'y / sigma^2, Q^-1), Q = X'X/sigma^2 + I/sigma_b^2
            beta = _draw_beta_fast(x / sigma, y / sigma, np.full(p, sigma2_b), 1.0, gen)
        else:
            prec = xtx / sigma2 + np.eye(p) / sigma2_b
            cf, low = cho_factor(prec, lower=True)
            mu = cho_solve((cf, low), x.T @ y / sigma2)
            z = gen.standard_normal(p)
            beta = mu + solve_triangular(cf, z, lower=True, trans="T")
        keep.offer(it, beta, sigma2)
    return keep.result()


def run_sampler(d: Dataset, prior: PriorSpec, cfg: McmcConfig) -> DrawMatrix:
    """Dispatch on the prior family."""
    fam = prior.family
    if isinstance(fam, NormalFixed) or isinstance(fam, NormalHyper):
        return gibbs_normal(d, fam, prior.sigma2_prior, cfg)
    if isinstance(fam, (LaplaceFixed, LaplaceHyper)):
        return gibbs_laplace(d, fam, prior.sigma2_prior, cfg)
    if isinstance(fam, DLFixed):
        return gibbs_dl(d, fam.a, prior.sigma2_prior, cfg)
    if isinstance(fam, DLHyperGrid):
        return gibbs_dl_hypergrid(d, fam, prior.sigma2_prior, cfg)
    raise TypeError(f"unsupported prior family: {fam!r}")


def summarize(draws: DrawMatrix, require_min_draws: bool = True) -> PosteriorSummary:
    m = draws.draws.shape[0]
    if require_min_draws and m < 100:
        raise ValueError(f"need at least 100 kept draws, got {m}")
    beta_mean = draws.draws.mean(axis=0)
    centered = draws.draws - beta_mean
    denom = max(m - 1, 1)
    beta_cov = centered.T @ centered / denom
    beta_cov = (beta_cov + beta_cov.T) / 2.0
    return PosteriorSummary(beta_mean=beta_mean, beta_cov=beta_cov,
                            sigma2_mean=float(draws.sigma2_draws.mean()), n_draws=m)


def dump_draws_csv(draws: DrawMatrix, path) -> None:
    p = draws.draws.shape[1]
    header = ",".join([f"beta_{j + 1}" for j in range(p)] + ["sigma2"])
    body = np.column_stack([draws.draws, draws.sigma2_draws])
    np.savetxt(path, body, delimiter=",", header=header, comments="")
