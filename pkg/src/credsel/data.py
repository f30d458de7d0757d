"""Shared domain types: datasets, prior specifications, spectra, summaries."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np

EIG_CLAMP = -1e-10


@dataclass(frozen=True)
class Dataset:
    """Response vector and design matrix for one regression problem."""

    y: np.ndarray
    x: np.ndarray
    standardized: bool = False
    # retained so selected models can be mapped back to the raw scale
    x_center: Optional[np.ndarray] = None
    x_scale: Optional[np.ndarray] = None
    y_center: Optional[float] = None

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        x = np.asarray(self.x, dtype=float)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)
        if x.ndim != 2:
            raise ValueError("x must be a 2-d matrix")
        n, p = x.shape
        if n < 2 or p < 1:
            raise ValueError(f"need n >= 2 and p >= 1, got n={n}, p={p}")
        if y.shape != (n,):
            raise ValueError(f"y has length {y.shape}, expected ({n},)")
        if self.standardized:
            if np.abs(x.mean(axis=0)).max() > 1e-10 or abs(y.mean()) > 1e-10:
                raise ValueError("standardized dataset must have centered columns and y")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]


# --- prior families -------------------------------------------------------

@dataclass(frozen=True)
class NormalFixed:
    gamma: float

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")


@dataclass(frozen=True)
class NormalHyper:
    """Unscaled N(0, sigma_b^2 I) prior with an inverse-gamma hyperprior on sigma_b^2."""

    shape: float = 0.001
    scale: float = 0.001

    def __post_init__(self):
        if self.shape <= 0 or self.scale <= 0:
            raise ValueError("hyperprior shape/scale must be positive")


@dataclass(frozen=True)
class LaplaceFixed:
    lam: float

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lambda must be positive")


@dataclass(frozen=True)
class LaplaceHyper:
    """Gamma hyperprior on the squared global scale lambda^2."""

    shape: float = 1.0
    rate: float = 1.0

    def __post_init__(self):
        if self.shape <= 0 or self.rate <= 0:
            raise ValueError("hyperprior shape/rate must be positive")


@dataclass(frozen=True)
class DLFixed:
    a: float

    def __post_init__(self):
        if not 0 < self.a <= 0.5:
            raise ValueError("DL concentration must lie in (0, 1/2]")


@dataclass(frozen=True)
class DLHyperGrid:
    lo: float
    hi: float
    n_points: int = 1000

    def __post_init__(self):
        if not (0 < self.lo < self.hi <= 0.5) and not (self.lo == self.hi and 0 < self.lo <= 0.5):
            raise ValueError("DL grid must satisfy 0 < lo < hi <= 1/2")
        if self.n_points < 1 or (self.lo < self.hi and self.n_points < 2):
            raise ValueError("DL grid needs at least 2 support points")

    def points(self) -> np.ndarray:
        if self.n_points == 1:
            return np.array([self.lo])
        return np.linspace(self.lo, self.hi, self.n_points)


PriorFamily = Union[NormalFixed, NormalHyper, LaplaceFixed, LaplaceHyper, DLFixed, DLHyperGrid]


@dataclass(frozen=True)
class PriorSpec:
    family: PriorFamily
    sigma2_prior: Tuple[float, float] = (0.001, 0.001)

    def __post_init__(self):
        a1, b1 = self.sigma2_prior
        if a1 <= 0 or b1 <= 0:
            raise ValueError("sigma^2 inverse-gamma prior parameters must be positive")


@dataclass(frozen=True)
class EigenSpectrum:
    """Eigendecomposition of the scaled gram matrix X'X/n."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.eigenvalues, dtype=float)
        g = np.asarray(self.eigenvectors, dtype=float)
        if np.any(np.diff(d) > 0):
            raise ValueError("eigenvalues must be sorted non-increasing")
        if np.any(d < EIG_CLAMP):
            raise ValueError("eigenvalues below the clamp threshold")
        object.__setattr__(self, "eigenvalues", np.maximum(d, 0.0))
        object.__setattr__(self, "eigenvectors", g)


@dataclass(frozen=True)
class PosteriorSummary:
    beta_mean: np.ndarray
    beta_cov: np.ndarray
    sigma2_mean: float
    n_draws: int

    def __post_init__(self):
        if self.n_draws <= 0:
            raise ValueError("n_draws must be positive")
        cov = np.asarray(self.beta_cov, dtype=float)
        if np.abs(cov - cov.T).max() > 1e-10:
            raise ValueError("beta_cov must be symmetric")


# --- operations -----------------------------------------------------------

def load_csv(path, response_col: str) -> Dataset:
    """Read a plain comma-separated file with a header row into a Dataset."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if response_col not in header:
            raise ValueError(f"{path}: response column absent: {response_col!r}")
        rows = []
        for i, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}: row {i} has {len(row)} cells, expected {len(header)}")
            vals = []
            for name, cell in zip(header, row):
                try:
                    v = float(cell)
                except ValueError:
                    v = math.nan
                if not math.isfinite(v):
                    raise ValueError(f"{path}: non-numeric cell at row {i}, column {name!r}: {cell!r}")
                vals.append(v)
            rows.append(vals)
    if len(rows) < 2:
        raise ValueError(f"{path}: need at least 2 data rows, got {len(rows)}")
    data = np.array(rows)
    ridx = header.index(response_col)
    y = data[:, ridx]
    x = np.delete(data, ridx, axis=1)
    return Dataset(y=y, x=x)


def write_csv(d: Dataset, path, response_col: str = "y") -> None:
    """Write a Dataset back out; values formatted with 17 significant digits."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([response_col] + [f"x{j + 1}" for j in range(d.p)])
        for i in range(d.n):
            writer.writerow([format(v, ".17g") for v in np.concatenate(([d.y[i]], d.x[i]))])


def standardize(d: Dataset) -> Dataset:
    """Center y; center columns of x and scale them to unit sample SD."""
    center = d.x.mean(axis=0)
    scale = d.x.std(axis=0, ddof=1)
    bad = np.flatnonzero(scale == 0.0)
    if bad.size:
        raise ValueError(f"constant column {bad[0] + 1}")
    x = (d.x - center) / scale
    y_center = d.y.mean()
    y = d.y - y_center
    if d.standardized:
        prev_center = d.x_center if d.x_center is not None else np.zeros(d.p)
        prev_scale = d.x_scale if d.x_scale is not None else np.ones(d.p)
        prev_y = d.y_center if d.y_center is not None else 0.0
        return Dataset(y=y, x=x, standardized=True,
                       x_center=prev_center + center * prev_scale,
                       x_scale=prev_scale * scale,
                       y_center=prev_y + y_center)
    return Dataset(y=y, x=x, standardized=True,
                   x_center=center, x_scale=scale, y_center=y_center)


def eigen_gram(d: Dataset) -> EigenSpectrum:
    """Eigendecomposition of X'X/n with descending eigenvalues."""
    gram = d.x.T @ d.x / d.n
    try:
        vals, vecs = np.linalg.eigh(gram)
    except np.linalg.LinAlgError as exc:
        cond = np.linalg.cond(gram)
        raise RuntimeError(f"eigendecomposition failed (condition estimate {cond:.3e})") from exc
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    vecs = vecs[:, order]
    vals = np.where(vals < 0, np.where(vals >= EIG_CLAMP, 0.0, vals), vals)
    return EigenSpectrum(eigenvalues=vals, eigenvectors=vecs)
