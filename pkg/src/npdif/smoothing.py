"""Kernels, empirical CDFs, nearest-neighbour IRC estimates and binned KDE."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

KERNELS = ("epanechnikov", "uniform")

KDE_GRID_SIZE = 401
DENSITY_FLOOR = 1e-12


def kernel_eval(kind: str, u):
    """Evaluate a compactly supported kernel on ``[-1, 1]``.

    Returns exactly zero outside the support.
    """
    u = np.asarray(u, dtype=float)
    inside = np.abs(u) <= 1.0
    if kind == "epanechnikov":
        out = np.where(inside, 0.75 * (1.0 - u * u), 0.0)
    elif kind == "uniform":
        out = np.where(inside, 0.5, 0.0)
    else:
        raise ValueError(f"unknown kernel {kind!r}; expected one of {KERNELS}")
    return out if out.ndim else float(out)


def bandwidth(n: int, zeta: float) -> float:
    """Bandwidth ``n ** -zeta`` on the ECDF scale."""
    if n < 1:
        raise ValueError("bandwidth needs n >= 1")
    if not 0.25 < zeta < 1 / 3:
        warnings.warn(
            f"zeta={zeta} outside (1/4, 1/3); bandwidth conditions do not hold",
            stacklevel=2,
        )
    return float(n) ** (-zeta)


@dataclass(frozen=True)
class SmoothingConfig:
    """Kernel choice and bandwidth exponent.

    ``bandwidth_n`` selects which sample size drives ``h = n ** -zeta``:
    ``"group"`` uses the size of the group being smoothed, ``"pooled"`` the
    combined sample size.
    """

    kernel: str = "epanechnikov"
    zeta: float = 7 / 24
    bandwidth_n: str = "group"

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise ValueError(f"unknown kernel {self.kernel!r}; expected one of {KERNELS}")
        if self.bandwidth_n not in ("group", "reference", "pooled"):
            raise ValueError("bandwidth_n must be 'group', 'reference' or 'pooled'")
        if not 0.25 < self.zeta < 1 / 3:
            warnings.warn(
                f"zeta={self.zeta} outside (1/4, 1/3); bandwidth conditions do not hold",
                stacklevel=2,
            )

    def h(self, n: int) -> float:
        if n < 1:
            raise ValueError("bandwidth needs n >= 1")
        return float(n) ** (-self.zeta)


class Ecdf:
    """Right-continuous empirical distribution function."""

    def __init__(self, values):
        values = np.sort(np.asarray(values, dtype=float).ravel())
        if values.size == 0:
            raise ValueError("empirical CDF of an empty sample")
        values.setflags(write=False)
        self.values = values

    @property
    def size(self) -> int:
        return self.values.size

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.searchsorted(self.values, x, side="right") / self.size
        return out if out.ndim else float(out)


def ecdf_build(values) -> Ecdf:
    return Ecdf(values)


def ecdf_eval(F: Ecdf, x):
    return F(x)


def nn_weight_matrix(group_scores, query, cfg: SmoothingConfig, n_bandwidth: int | None = None,
                     strict: bool = True):
    """Nearest-neighbour weights of every group member at every query point.

    Parameters
    ----------
    group_scores : array of shape (n_g,)
        Matching-criterion values of the group.
    query : array of shape (q,)
        Evaluation points.
    cfg : SmoothingConfig
    n_bandwidth : int, optional
        Sample size used for the bandwidth; defaults to ``n_g``.
    strict : bool
        Raise when a query point has no neighbour inside the bandwidth.
        Otherwise that column is filled with NaN.

    Returns
    -------
    ndarray of shape (n_g, q)
        Column ``j`` holds the weights at ``query[j]``; every column sums to 1.
    """
    scores = np.asarray(group_scores, dtype=float)
    query = np.atleast_1d(np.asarray(query, dtype=float))
    F = Ecdf(scores)
    h = cfg.h(n_bandwidth if n_bandwidth is not None else scores.size)
    u = (F(scores)[:, None] - F(query)[None, :]) / h
    k = kernel_eval(cfg.kernel, u)
    total = k.sum(axis=0)
    if not strict:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(total > 0, k / np.where(total > 0, total, 1.0), np.nan)
    if np.any(total == 0.0):
        bad = query[np.argmax(total == 0.0)]
        raise ValueError(f"no neighbours in bandwidth h={h:.4g} at x={bad:.6g}")
    return k / total


def nn_weights(group_scores, x: float, cfg: SmoothingConfig) -> np.ndarray:
    return nn_weight_matrix(group_scores, [x], cfg)[:, 0]


@dataclass(frozen=True)
class IrcEstimate:
    eval_points: np.ndarray
    values: np.ndarray
    group: int | None = None
    item: int | str | None = None


def irc_estimate(item_responses, group_scores, eval_points, cfg: SmoothingConfig,
                 group: int | None = None, item=None) -> IrcEstimate:
    """Nearest-neighbour estimate of an item response curve."""
    y = np.asarray(item_responses, dtype=float)
    scores = np.asarray(group_scores, dtype=float)
    if y.shape != scores.shape:
        raise ValueError("responses and scores must have equal length")
    points = np.atleast_1d(np.asarray(eval_points, dtype=float))
    W = nn_weight_matrix(scores, points, cfg)
    values = np.clip(y @ W, 0.0, 1.0)
    return IrcEstimate(points, values, group, item)


def conditional_variance(m_hat):
    """Bernoulli variance ``m (1 - m)``."""
    m = np.asarray(m_hat, dtype=float)
    if np.any((m < 0.0) | (m > 1.0)):
        raise ValueError("curve values must lie in [0, 1]")
    out = m * (1.0 - m)
    return out if out.ndim else float(out)


def kde_density(values, query_points, weights=None) -> np.ndarray:
    """Gaussian binned kernel density estimate.

    The sample is linearly binned onto a 401-point grid spanning
    ``[min - 3b, max + 3b]`` with rule-of-thumb bandwidth
    ``b = 1.06 * sd * n ** (-1/5)``; queries are answered by linear
    interpolation on the grid and floored at ``1e-12``.

    ``weights`` gives integer-like multiplicities; ``n`` is then their sum.
    """
    x = np.asarray(values, dtype=float).ravel()
    w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=float).ravel()
    if w.shape != x.shape:
        raise ValueError("weights must match values")
    n = w.sum()
    if x.size < 1 or n < 2:
        raise ValueError("KDE needs at least two observations")
    mean = np.dot(w, x) / n
    sd = np.sqrt(np.dot(w, (x - mean) ** 2) / (n - 1))
    if not sd > 0:
        raise ValueError("KDE of a degenerate sample (zero standard deviation)")
    b = 1.06 * sd * n ** (-0.2)
    grid, dens = _binned_gaussian(x, w, b)
    q = np.asarray(query_points, dtype=float)
    out = np.interp(q, grid, dens, left=0.0, right=0.0)
    return np.maximum(out, DENSITY_FLOOR)


def _binned_gaussian(x, w, b):
    lo, hi = x.min() - 3 * b, x.max() + 3 * b
    grid = np.linspace(lo, hi, KDE_GRID_SIZE)
    delta = grid[1] - grid[0]
    pos = (x - lo) / delta
    left = np.clip(np.floor(pos).astype(int), 0, KDE_GRID_SIZE - 2)
    frac = pos - left
    counts = np.zeros(KDE_GRID_SIZE)
    np.add.at(counts, left, w * (1.0 - frac))
    np.add.at(counts, left + 1, w * frac)
    counts /= counts.sum()
    offsets = np.arange(-(KDE_GRID_SIZE - 1), KDE_GRID_SIZE) * delta
    kern = np.exp(-0.5 * (offsets / b) ** 2) / (b * np.sqrt(2 * np.pi))
    dens = np.convolve(counts, kern, mode="valid")
    return grid, dens
