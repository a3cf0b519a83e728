"""Common evaluation support built from pairwise averages of matching scores."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import GroupedScores

DEFAULT_SUPPORT_SIZE = 2000


@dataclass(frozen=True)
class SupportSet:
    """Unique evaluation points with integer multiplicities.

    ``total_mass`` replaces ``n0 * n1`` as the divisor of every support sum.
    """

    points: np.ndarray
    multiplicities: np.ndarray
    reduced: bool = False

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        mult = np.asarray(self.multiplicities, dtype=np.int64)
        if pts.shape != mult.shape or pts.ndim != 1:
            raise ValueError("points and multiplicities must be 1-D and aligned")
        if pts.size and (np.any(np.diff(pts) <= 0) or np.any(mult <= 0)):
            raise ValueError("points must be strictly increasing with positive multiplicities")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "multiplicities", mult)

    @property
    def total_mass(self) -> int:
        return int(self.multiplicities.sum())

    @property
    def probabilities(self) -> np.ndarray:
        return self.multiplicities / self.total_mass

    def __len__(self):
        return self.points.size


def common_support(gs: GroupedScores) -> SupportSet:
    """All ``n0 * n1`` pairwise averages, collapsed to unique values."""
    # Collapse each group to unique values first: matching scores are
    # usually discrete, which keeps the outer product small.
    u0, c0 = np.unique(gs.theta0, return_counts=True)
    u1, c1 = np.unique(gs.theta1, return_counts=True)
    # Rounding merges averages that differ only by floating-point noise.
    avg = np.round((u0[:, None] + u1[None, :]) / 2.0, 12).ravel()
    cnt = (c0[:, None] * c1[None, :]).ravel()
    points, inverse = np.unique(avg, return_inverse=True)
    mult = np.bincount(inverse.ravel(), weights=cnt, minlength=points.size)
    return SupportSet(points, np.rint(mult).astype(np.int64), reduced=False)


def reduced_support(gs: GroupedScores, target_size: int, rng) -> SupportSet:
    """Weighted resample (with replacement) of the unique support values."""
    if target_size < 1:
        raise ValueError("target_size must be >= 1")
    rng = np.random.default_rng(rng)
    full = common_support(gs)
    counts = rng.multinomial(target_size, full.probabilities)
    keep = counts > 0
    return SupportSet(full.points[keep], counts[keep], reduced=True)


def build_support(gs: GroupedScores, support_size: int | None = DEFAULT_SUPPORT_SIZE,
                  rng=None) -> SupportSet:
    """Full support, or a reduced one when ``n0 * n1`` exceeds ``support_size``.

    ``support_size=None`` disables reduction.
    """
    if support_size is None or gs.n0 * gs.n1 <= support_size:
        return common_support(gs)
    return reduced_support(gs, support_size, rng)
