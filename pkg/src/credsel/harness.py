"""Simulation machinery: AR designs, orderings scored as ROC/PRC, splits.

The synthetic designs draw rows with corr(x_j1, x_j2) = rho^|j1-j2| and a
fixed sparse truth: two blocks of five uniform(0,1) coefficients at
positions 11-15 and 36-40 (1-based), everything else zero. Selection
methods are compared through the variable ordering they induce, scored
against the true support with trapezoidal ROC and precision-recall areas.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Sequence, Tuple

import numpy as np

from .data import Dataset, standardize
from .rng import RngState

SUPPORT = tuple(range(10, 15)) + tuple(range(35, 40))  # 0-based fixed pattern


@dataclass(frozen=True)
class SimDesign:
    n: int
    p: int
    rho: float
    sigma2: float = 1.0
    seed: RngState = field(default_factory=lambda: RngState(0))

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("need n >= 2")
        if self.p < 41:
            raise ValueError("the coefficient pattern needs p >= 41")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError("rho must lie in [0, 1)")
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be positive")


@dataclass(frozen=True)
class TruthPattern:
    beta0: np.ndarray
    support: Tuple[int, ...]

    def __post_init__(self):
        if self.support != SUPPORT:
            raise ValueError("support must be the fixed two-block pattern")
        nz = np.flatnonzero(self.beta0)
        if tuple(nz) != SUPPORT:
            raise ValueError("beta0 must be supported exactly on the pattern")
        vals = self.beta0[list(SUPPORT)]
        if np.any(vals <= 0) or np.any(vals >= 1):
            raise ValueError("nonzero coefficients must lie in (0, 1)")


@dataclass(frozen=True)
class EvalCurves:
    roc_points: np.ndarray   # (FPR, TPR) rows
    prc_points: np.ndarray   # (recall, precision) rows
    roc_area: float
    prc_area: float
    partial: bool = False

    def __post_init__(self):
        for pts in (self.roc_points, self.prc_points):
            if np.any(np.diff(pts[:, 0]) < -1e-12):
                raise ValueError("curve points must be sorted by x")
        if not (0 <= self.roc_area <= 1 and 0 <= self.prc_area <= 1):
            raise ValueError("areas must lie in [0, 1]")


def simulate(design: SimDesign) -> Tuple[Dataset, TruthPattern]:
    """Draw one dataset; bit-identical for equal designs."""
    gen = RngState(design.seed.seed, design.seed.stream).gen
    n, p, rho = design.n, design.p, design.rho
    eps = gen.standard_normal((n, p))
    x = np.empty((n, p))
    x[:, 0] = eps[:, 0]
    scale = np.sqrt(1.0 - rho ** 2)
    for j in range(1, p):
        x[:, j] = rho * x[:, j - 1] + scale * eps[:, j]
    beta0 = np.zeros(p)
    beta0[10:15] = gen.uniform(size=5)
    beta0[35:40] = gen.uniform(size=5)
    y = x @ beta0 + np.sqrt(design.sigma2) * gen.standard_normal(n)
    return Dataset(y=y, x=x), TruthPattern(beta0=beta0, support=SUPPORT)


def score_ordering(ordering: Sequence[int], truth: TruthPattern) -> EvalCurves:
    """ROC and PRC curves of the nested models along a variable ordering.

    The ordering may be a prefix (a partial path); areas are then taken
    over the achieved range only and the result is flagged partial.
    """
    return score_ordering_support(ordering, truth.support, truth.beta0.size)


def score_ordering_support(ordering: Sequence[int], support: Sequence[int],
                           p: int) -> EvalCurves:
    """Same scoring against an arbitrary true support."""
    order = [int(j) for j in ordering]
    if len(set(order)) != len(order) or any(not 0 <= j < p for j in order):
        raise ValueError("ordering must list distinct indices in 0..p-1")
    support = set(int(j) for j in support)
    n_pos = len(support)
    n_neg = p - n_pos

    roc = [(0.0, 0.0)]
    prc = [(0.0, 1.0)]
    tp = fp = 0
    for j in order:
        if j in support:
            tp += 1
        else:
            fp += 1
        k = tp + fp
        roc.append((fp / n_neg, tp / n_pos))
        prc.append((tp / n_pos, tp / k))
    roc_pts = np.array(roc)
    prc_pts = np.array(prc)
    roc_area = float(np.trapezoid(roc_pts[:, 1], roc_pts[:, 0]))
    prc_area = float(np.trapezoid(prc_pts[:, 1], prc_pts[:, 0]))
    return EvalCurves(roc_points=roc_pts, prc_points=prc_pts,
                      roc_area=roc_area, prc_area=prc_area,
                      partial=len(order) < p)


def screen_by_correlation(d: Dataset, keep: int) -> np.ndarray:
    """Indices of the `keep` columns most correlated with the response."""
    if not 0 < keep <= d.p:
        raise ValueError("keep must lie in 1..p")
    xc = d.x - d.x.mean(axis=0)
    yc = d.y - d.y.mean()
    sx = np.sqrt(np.sum(xc ** 2, axis=0))
    sy = np.sqrt(np.sum(yc ** 2))
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = np.abs(xc.T @ yc) / (sx * sy)
    corr = np.where((sx == 0) | (sy == 0), 0.0, corr)
    # stable sort on -corr keeps lower indices first among ties
    chosen = np.argsort(-corr, kind="stable")[:keep]
    return np.sort(chosen)


@dataclass(frozen=True)
class SplitResult:
    mspe_mean: float
    mspe_se: float
    size_mean: float
    size_se: float
    n_failed: int


def split_and_mspe(d: Dataset, train_n: int,
                   pipeline: Callable[[Dataset, RngState], Sequence[int]],
                   n_splits: int, rng: RngState) -> SplitResult:
    """Random train/test splits; the pipeline returns a selected support.

    Per split the pipeline sees the raw training Dataset; the harness then
    refits ordinary least squares with an intercept on the selected raw
    columns and scores squared prediction error on the held-out rows.
    Pipeline failures are recorded and the split skipped.
    """
    if not 0 < train_n < d.n:
        raise ValueError("train_n must lie strictly between 0 and n")
    if n_splits < 2:
        raise ValueError("need at least 2 splits")
    mspes: List[float] = []
    sizes: List[int] = []
    failed = 0
    for i in range(n_splits):
        sub = rng.substream(i)
        perm = sub.gen.permutation(d.n)
        tr, te = perm[:train_n], perm[train_n:]
        d_train = Dataset(y=d.y[tr], x=d.x[tr])
        try:
            chosen = sorted(int(j) for j in pipeline(d_train, sub))
        except Exception:
            failed += 1
            continue
        xtr = np.column_stack([np.ones(train_n)] + [d.x[tr][:, j] for j in chosen])
        coef, *_ = np.linalg.lstsq(xtr, d.y[tr], rcond=None)
        xte = np.column_stack([np.ones(te.size)] + [d.x[te][:, j] for j in chosen])
        pred = xte @ coef
        mspes.append(float(np.mean((d.y[te] - pred) ** 2)))
        sizes.append(len(chosen))
    if not mspes:
        raise RuntimeError(f"all {n_splits} splits failed")
    mspes_a = np.array(mspes)
    sizes_a = np.array(sizes, dtype=float)
    m = len(mspes)
    return SplitResult(
        mspe_mean=float(mspes_a.mean()),
        mspe_se=float(mspes_a.std(ddof=1) / np.sqrt(m)) if m > 1 else 0.0,
        size_mean=float(sizes_a.mean()),
        size_se=float(sizes_a.std(ddof=1) / np.sqrt(m)) if m > 1 else 0.0,
        n_failed=failed,
    )
