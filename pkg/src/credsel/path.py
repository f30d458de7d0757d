"""Selection of sparse models from posterior summaries via penalized regions.

Given a posterior mean beta_hat and covariance Sigma, candidate models come
from the optimization

    minimize  (beta - beta_hat)' Sigma^-1 (beta - beta_hat)
              + lam * sum_j |beta_hat_j|^-2 |beta_j|

traced over all lam >= 0. A change of variables b_j = w_j beta_j with
w_j = |beta_hat_j|^-2 turns this into a plain lasso problem

    minimize  ||y* - X* b||^2 + lam ||b||_1

with X* = L diag(1/w), y* = L beta_hat, and L triangular with
L'L = Sigma^-1. The full solution path is piecewise linear in lam and is
traced exactly by a homotopy over its knots, including variables dropping
back out of the active set. Models along the path are compared with BIC
after an ordinary least squares refit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

from .data import Dataset, PosteriorSummary

WEIGHT_CAP = 1e12  # cap on |beta_hat_j|^-2 so zero estimates stay finite


@dataclass(frozen=True)
class SelectionProblem:
    """Penalized-region program in its weighted lasso form."""

    beta_hat: np.ndarray       # posterior mean, length p
    sigma_inv_chol: np.ndarray  # triangular L with L'L = Sigma^-1
    weights: np.ndarray        # w_j = min(|beta_hat_j|^-2, cap)

    def __post_init__(self):
        p = self.beta_hat.size
        if self.sigma_inv_chol.shape != (p, p):
            raise ValueError("sigma_inv_chol must be p x p")
        if self.weights.shape != (p,):
            raise ValueError("weights must have length p")
        if not np.all(np.isfinite(self.weights)) or np.any(self.weights <= 0):
            raise ValueError("weights must be positive and finite")

    @property
    def p(self) -> int:
        return self.beta_hat.size

    @property
    def design(self) -> np.ndarray:
        return self.sigma_inv_chol / self.weights[np.newaxis, :]

    @property
    def response(self) -> np.ndarray:
        return self.sigma_inv_chol @ self.beta_hat


@dataclass(frozen=True)
class _PlainLasso:
    """Lasso instance taken directly from data (unit weights)."""

    design: np.ndarray
    response: np.ndarray

    @property
    def p(self) -> int:
        return self.design.shape[1]

    @property
    def weights(self) -> np.ndarray:
        return np.ones(self.p)


@dataclass(frozen=True)
class PathStep:
    """One knot of the piecewise-linear path."""

    lam: float
    active: Tuple[int, ...]        # sorted active indices after the event
    beta: np.ndarray               # coefficients on the original scale
    event: str                     # "enter", "drop", or "end"
    index: Optional[int]           # variable that entered or dropped


@dataclass
class SelectionPath:
    steps: List[PathStep] = field(default_factory=list)
    truncated: bool = False

    def entry_order(self) -> List[int]:
        """Variables in order of first activation along the path."""
        seen = []
        for step in self.steps:
            if step.event == "enter" and step.index not in seen:
                seen.append(step.index)
        return seen

    def full_ordering(self, p: int) -> Tuple[List[int], bool]:
        """Entry ordering padded to a permutation of 0..p-1.

        Variables the path never activated are appended in index order; the
        flag reports whether any padding was needed (a partial path).
        """
        order = self.entry_order()
        missing = [j for j in range(p) if j not in set(order)]
        return order + missing, bool(missing)

    def models(self) -> List[Tuple[int, ...]]:
        """Distinct active sets in path order, starting from the empty model."""
        out = [()]
        for step in self.steps:
            if step.active not in out:
                out.append(step.active)
        return out


def build_problem(summary: PosteriorSummary) -> SelectionProblem:
    """Assemble the weighted lasso instance from a posterior summary."""
    beta_hat = np.asarray(summary.beta_mean, dtype=float)
    sigma = np.asarray(summary.beta_cov, dtype=float)
    p = beta_hat.size
    if sigma.shape != (p, p):
        raise ValueError("covariance shape does not match the mean")

    jitter = 0.0
    base = 1e-10 * max(np.trace(sigma) / p, 1.0)
    for _ in range(6):
        try:
            c, _ = cho_factor(sigma + jitter * np.eye(p), lower=True)
            break
        except np.linalg.LinAlgError:
            jitter = base if jitter == 0.0 else jitter * 100.0
    else:
        raise RuntimeError("posterior covariance not factorizable after jitter")

    # sigma = C C' (C lower), so L = C^-1 satisfies L'L = sigma^-1
    ell = solve_triangular(np.tril(c), np.eye(p), lower=True)
    with np.errstate(divide="ignore"):
        weights = np.where(beta_hat == 0.0, WEIGHT_CAP,
                           np.minimum(beta_hat ** -2.0, WEIGHT_CAP))
    return SelectionProblem(beta_hat=beta_hat, sigma_inv_chol=ell, weights=weights)


def solve_path(problem, max_steps: Optional[int] = None,
               tol: float = 1e-9) -> SelectionPath:
    """Trace every knot of the lasso path by homotopy.

    The objective carries no 1/2 factor, so the subgradient conditions read
    2 X'(y - X b) = lam * sign(b) on the active set and |2 x_j' r| <= lam
    off it. Between knots the active coefficients are linear in lam:
    b_A(lam) = u - (lam / 2) v with u = G_A^-1 X_A' y and v = G_A^-1 s_A.
    """
    x, y, w = problem.design, problem.response, problem.weights
    m, p = x.shape
    if max_steps is None:
        max_steps = 8 * min(m, p)
    max_active = min(m, p)

    corr = 2.0 * (x.T @ y)
    lam = float(np.max(np.abs(corr)))
    if lam <= tol:
        return SelectionPath(steps=[PathStep(0.0, (), np.zeros(p), "end", None)])
    first = int(np.argmax(np.abs(corr)))
    active = [first]
    signs = [1.0 if corr[first] > 0 else -1.0]
    path = SelectionPath()
    path.steps.append(PathStep(lam, (first,), np.zeros(p), "enter", first))

    for _ in range(max_steps):
        act = list(active)
        sgn = np.array(signs)
        xa = x[:, act]
        g = xa.T @ xa
        try:
            cf = cho_factor(g + 1e-12 * np.trace(g) / max(len(act), 1) * np.eye(len(act)),
                            lower=True)
            u = cho_solve(cf, xa.T @ y)
            v = cho_solve(cf, sgn)
        except np.linalg.LinAlgError:
            u, *_ = np.linalg.lstsq(g, xa.T @ y, rcond=None)
            v, *_ = np.linalg.lstsq(g, sgn, rcond=None)

        # candidate entry knots: |2 x_j'(y - X_A b_A(lam))| reaches lam
        resid0 = y - xa @ u
        r = x.T @ resid0
        gvec = x.T @ (xa @ v)
        best_lam = 0.0
        best_idx = None
        best_event = "end"
        inactive = np.setdiff1d(np.arange(p), act, assume_unique=False)
        for j in inactive:
            for cand in (2.0 * r[j] / (1.0 - gvec[j]) if gvec[j] != 1.0 else -1.0,
                         -2.0 * r[j] / (1.0 + gvec[j]) if gvec[j] != -1.0 else -1.0):
                if tol < cand < lam - tol and (cand > best_lam + tol or
                                               (abs(cand - best_lam) <= tol and
                                                (best_idx is None or j < best_idx))):
                    best_lam, best_idx, best_event = float(cand), int(j), "enter"

        # candidate drop knots: an active coefficient crosses zero
        for k, j in enumerate(act):
            if v[k] == 0.0:
                continue
            cand = 2.0 * u[k] / v[k]
            if tol < cand < lam - tol and (cand > best_lam + tol or
                                           (abs(cand - best_lam) <= tol and
                                            (best_idx is None or j < best_idx))):
                best_lam, best_idx, best_event = float(cand), int(j), "drop"

        if best_idx is None or (best_event == "enter" and len(act) >= max_active):
            # path runs to lam = 0: active coefficients reach their refit values
            beta = np.zeros(p)
            beta[act] = u / w[act]
            path.steps.append(PathStep(0.0, tuple(act), beta, "end", None))
            return path

        b_at = u - (best_lam / 2.0) * v
        beta = np.zeros(p)
        beta[act] = b_at / w[act]
        if best_event == "drop":
            k = act.index(best_idx)
            beta[best_idx] = 0.0
            new_act = act[:k] + act[k + 1:]
            new_sgn = list(sgn[:k]) + list(sgn[k + 1:])
        else:
            new_act = sorted(act + [best_idx])
            c_j = 2.0 * r[best_idx] + best_lam * gvec[best_idx]
            s_new = 1.0 if c_j > 0 else -1.0
            new_sgn = []
            pos = 0
            for j in new_act:
                if j == best_idx:
                    new_sgn.append(s_new)
                else:
                    new_sgn.append(sgn[pos])
                    pos += 1
        path.steps.append(PathStep(best_lam, tuple(new_act), beta, best_event, best_idx))
        active, signs = list(new_act), list(new_sgn)
        lam = best_lam

    path.truncated = True
    return path


def check_kkt(problem, lam: float, beta: np.ndarray, tol: float = 1e-6) -> bool:
    """Verify the lasso stationarity conditions at (lam, beta).

    beta is on the original scale; the conditions are checked on the
    transformed variables b_j = w_j beta_j.
    """
    x, y, w = problem.design, problem.response, problem.weights
    b = w * np.asarray(beta, dtype=float)
    corr = 2.0 * (x.T @ (y - x @ b))
    scale = max(lam, 1.0)
    for j in range(problem.p):
        if b[j] != 0.0:
            if abs(corr[j] - lam * np.sign(b[j])) > tol * scale:
                return False
        elif abs(corr[j]) > lam + tol * scale:
            return False
    return True


@dataclass(frozen=True)
class BicChoice:
    active: Tuple[int, ...]
    bic: float
    coef: np.ndarray       # OLS refit on the selected columns
    table: Tuple[Tuple[Tuple[int, ...], float], ...]


def select_bic(path: SelectionPath, d: Dataset, max_size: int = 30) -> BicChoice:
    """Score every model on the path with BIC after an OLS refit.

    Only models with fewer than max_size variables are scored; the empty
    model is always a candidate. Ties go to the smaller model.
    """
    n = d.n
    table = []
    best = None
    for model in path.models():
        k = len(model)
        if k >= max_size or k >= n:
            continue
        if k == 0:
            rss = float(d.y @ d.y)
            coef = np.zeros(0)
        else:
            xa = d.x[:, list(model)]
            coef, *_ = np.linalg.lstsq(xa, d.y, rcond=None)
            r = d.y - xa @ coef
            rss = float(r @ r)
        rss = max(rss, 1e-300)
        bic = n * np.log(rss / n) + k * np.log(n)
        table.append((model, float(bic)))
        if best is None or bic < best[1] - 1e-12 or (abs(bic - best[1]) <= 1e-12 and
                                                    k < len(best[0])):
            best = (model, float(bic), coef)
    if best is None:
        raise RuntimeError("no path model satisfies the size constraint")
    full = np.zeros(d.p)
    if best[0]:
        full[list(best[0])] = best[2]
    return BicChoice(active=best[0], bic=best[1], coef=full, table=tuple(table))


def credible_selection(summary: PosteriorSummary, d: Dataset,
                       max_size: int = 30) -> BicChoice:
    """End to end: posterior summary -> path -> BIC choice."""
    path = solve_path(build_problem(summary))
    return select_bic(path, d, max_size=max_size)


def lasso_baseline(d: Dataset, max_steps: Optional[int] = None) -> SelectionPath:
    """Plain lasso path of y on X, for the frequentist baseline.

    The active set is capped at min(n, p), so for p > n the path (and the
    variable ordering it induces) is partial.
    """
    if not d.standardized:
        raise ValueError("lasso baseline requires a standardized Dataset")
    return solve_path(_PlainLasso(design=d.x.copy(), response=d.y.copy()),
                      max_steps=max_steps)
