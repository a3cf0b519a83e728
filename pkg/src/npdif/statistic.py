"""Weighted comparison of two item response curves over a common support.

Every routine accepts response arrays of shape ``(n_g,)`` or ``(n_g, k)``;
the trailing axis indexes independent response columns (items or bootstrap
replicates) so whole batches are evaluated with one matrix product.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import trapezoid
from scipy.stats import norm

from .data import GroupedScores
from .smoothing import SmoothingConfig, kde_density, nn_weight_matrix
from .support import SupportSet

DENOMINATOR_FLOOR = 1e-12
DIVERGENCE_CAP = 1e6

METHODS = (
    "np_fixed",
    "np_optimal_true",
    "np_optimal_asymptotic",
    "np_optimal_boot",
    "logistic",
)


@dataclass(frozen=True)
class WeightSpec:
    """Which weight function to use.

    For ``optimal_true`` the true curves ``m0``, ``m1`` and the densities
    ``f0``, ``f1`` (group traits) and ``e`` (pairwise averages) are callables
    of the matching criterion.
    """

    tag: str = "fixed"
    m0: Callable | None = None
    m1: Callable | None = None
    f0: Callable | None = None
    f1: Callable | None = None
    e: Callable | None = None
    divergence_cap: float = DIVERGENCE_CAP

    def __post_init__(self):
        if self.tag not in ("fixed", "optimal_true", "optimal_estimated"):
            raise ValueError(f"unknown weight tag {self.tag!r}")
        if not self.divergence_cap > 0:
            raise ValueError("divergence_cap must be positive")
        if self.tag == "optimal_true" and None in (self.m0, self.m1, self.f0, self.f1, self.e):
            raise ValueError("optimal_true weights need m0, m1, f0, f1 and e")


@dataclass
class DifResult:
    """Outcome of one DIF test on one item.

    For the logistic method ``T_hat`` holds the likelihood-ratio chi-square
    and ``sigma2_hat``/``z`` are NaN.
    """

    item: int | str
    method: str
    T_hat: float
    sigma2_hat: float
    z: float
    p_value: float
    diagnostics: dict = field(default_factory=dict)

    def rejects(self, alpha: float) -> bool:
        return self.p_value < alpha

    def as_row(self) -> dict:
        row = {
            "item": self.item,
            "method": self.method,
            "statistic": self.T_hat,
            "sigma2": self.sigma2_hat,
            "z": self.z,
            "p_value": self.p_value,
        }
        row.update(self.diagnostics)
        return row


class DifDesign:
    """Response-independent pieces of a two-group comparison.

    Holds the nearest-neighbour weight matrices of both groups at the support
    points and at the groups' own scores, and (lazily) the density estimates
    and the pooled-sample weights used by the bootstrap null fit. One design
    serves every item of a test and every bootstrap replicate.
    """

    def __init__(self, gs: GroupedScores, cfg: SmoothingConfig, support: SupportSet):
        self.gs = gs
        self.cfg = cfg
        self.support = support
        n = gs.n0 + gs.n1
        nbw0, nbw1 = {"group": (gs.n0, gs.n1), "reference": (gs.n0, gs.n0),
                      "pooled": (n, n)}[cfg.bandwidth_n]
        self.w0 = nn_weight_matrix(gs.theta0, support.points, cfg, nbw0)
        self.w1 = nn_weight_matrix(gs.theta1, support.points, cfg, nbw1)
        self.w0_self = nn_weight_matrix(gs.theta0, gs.theta0, cfg, nbw0)
        self.w1_self = nn_weight_matrix(gs.theta1, gs.theta1, cfg, nbw1)
        self._densities = None
        self._pooled = None

    @property
    def mass(self) -> np.ndarray:
        return self.support.multiplicities.astype(float)

    def curves(self, y0, y1):
        """IRC estimates of both groups at the support points."""
        return self.w0.T @ np.asarray(y0, float), self.w1.T @ np.asarray(y1, float)

    def own_curves(self, y0, y1):
        """IRC estimates of both groups at their members' own scores."""
        return self.w0_self.T @ np.asarray(y0, float), self.w1_self.T @ np.asarray(y1, float)

    @property
    def densities(self):
        """``(f0, f1, e)`` estimated at the support points."""
        if self._densities is None:
            pts = self.support.points
            f0 = kde_density(self.gs.theta0, pts)
            f1 = kde_density(self.gs.theta1, pts)
            if len(self.support) > 1:
                e = kde_density(pts, pts, weights=self.support.multiplicities)
            else:
                e = np.ones(1)
            self._densities = (f0, f1, e)
        return self._densities

    @property
    def pooled_weights(self) -> np.ndarray:
        """Pooled-sample weights at every respondent's own score, ``(n, n)``.

        Rows and columns follow the order ``theta0`` then ``theta1``.
        """
        if self._pooled is None:
            pooled = np.concatenate([self.gs.theta0, self.gs.theta1])
            cfg = SmoothingConfig(self.cfg.kernel, self.cfg.zeta, "pooled")
            self._pooled = nn_weight_matrix(pooled, pooled, cfg, pooled.size)
        return self._pooled


def fixed_weights(support: SupportSet) -> np.ndarray:
    return np.ones(len(support))


def _optimal_ratio(diff, s0, s1, f0, f1, e, lam):
    f0 = np.reshape(f0, np.shape(f0) + (1,) * (np.ndim(diff) - np.ndim(f0)))
    f1 = np.reshape(f1, np.shape(f1) + (1,) * (np.ndim(diff) - np.ndim(f1)))
    e = np.reshape(e, np.shape(e) + (1,) * (np.ndim(diff) - np.ndim(e)))
    denom = (1.0 - lam) * s0 * e / f0 + lam * s1 * e / f1
    return diff / np.maximum(denom, DENOMINATOR_FLOOR), denom


def optimal_weights(m0, m1, f0, f1, e, lam: float, support: SupportSet) -> np.ndarray:
    """Power-maximising weights from known curves and densities.

    ``m0``, ``m1``, ``f0``, ``f1`` and ``e`` are callables evaluated at the
    support points. The denominator is floored at ``1e-12``.
    """
    if not 0.0 < lam < 1.0:
        raise ValueError("lambda must lie in (0, 1)")
    x = support.points
    v0, v1 = np.asarray(m0(x), float), np.asarray(m1(x), float)
    if np.any((v0 < 0) | (v0 > 1) | (v1 < 0) | (v1 > 1)):
        raise ValueError("true curves must lie in [0, 1]")
    w, _ = _optimal_ratio(v0 - v1, v0 * (1 - v0), v1 * (1 - v1), f0(x), f1(x), e(x), lam)
    return w


def estimated_optimal_weights(design: DifDesign, y0, y1) -> np.ndarray:
    """Plug-in estimate of the optimal weights at the support points."""
    m0, m1 = design.curves(y0, y1)
    f0, f1, e = design.densities
    w, _ = _optimal_ratio(m0 - m1, m0 * (1 - m0), m1 * (1 - m1), f0, f1, e,
                          design.gs.lambda_hat)
    return w


def weights_diverged(weights, cap: float = DIVERGENCE_CAP):
    """True where any weight magnitude exceeds ``cap`` (per column)."""
    return np.any(np.abs(weights) > cap, axis=0)


def test_statistic(m0_hat, m1_hat, weights, support: SupportSet):
    """Multiplicity-weighted mean of ``W(x) * (m0(x) - m1(x))`` over the support."""
    m0_hat, m1_hat, weights = map(np.asarray, (m0_hat, m1_hat, weights))
    n = len(support)
    if m0_hat.shape[0] != n or m1_hat.shape[0] != n or weights.shape[0] != n:
        raise ValueError("curve and weight vectors must align with the support points")
    mass = support.multiplicities.astype(float)
    gap = m0_hat - m1_hat
    if weights.ndim < gap.ndim:
        weights = weights.reshape(weights.shape + (1,) * (gap.ndim - weights.ndim))
    diff = gap * weights
    return np.tensordot(mass, diff, axes=(0, 0)) / support.total_mass


def _variance(design: DifDesign, weights, spread0, spread1):
    # Each respondent's coefficient in the linear statistic is the
    # support-averaged product W(x) * W_p(x); scaling by N makes the result
    # an estimate of the variance of sqrt(N) * T.
    mass = design.mass
    mw = np.asarray(weights, float) * (mass if np.ndim(weights) == 1 else mass[:, None])
    total = design.support.total_mass
    coef0 = design.w0 @ mw / total
    coef1 = design.w1 @ mw / total
    if coef0.ndim < np.ndim(spread0):
        coef0, coef1 = coef0[:, None], coef1[:, None]
    v = (spread0 * coef0**2).sum(axis=0) + (spread1 * coef1**2).sum(axis=0)
    return design.gs.effective_n * v


def variance_estimate(design: DifDesign, y0, y1, weights):
    """Variance estimate built from estimated conditional Bernoulli variances."""
    y0, y1 = np.asarray(y0, float), np.asarray(y1, float)
    a0, a1 = design.own_curves(y0, y1)
    # smoothing 1 - Y gives 1 - m exactly zero for constant responses
    b0, b1 = design.own_curves(1.0 - y0, 1.0 - y1)
    return _variance(design, weights, a0 * b0, a1 * b1)


def variance_estimate_residual(design: DifDesign, y0, y1, weights):
    """Variance estimate built from squared residuals ``(Y_p - m(theta_p))**2``."""
    y0, y1 = np.asarray(y0, float), np.asarray(y1, float)
    a0, a1 = design.own_curves(y0, y1)
    b0, b1 = design.own_curves(1.0 - y0, 1.0 - y1)
    # Y - m written as Y (1 - m) - (1 - Y) m for binary Y
    r0 = y0 * b0 - (1.0 - y0) * a0
    r1 = y1 * b1 - (1.0 - y1) * a1
    return _variance(design, weights, r0**2, r1**2)


def normalized_statistic(T_hat: float, sigma2_hat: float, n0: int, n1: int):
    """``z = sqrt(N) T / sigma`` and its two-sided normal p-value.

    A zero variance estimate gives ``(0, 1)`` when ``T_hat`` is zero and
    raises otherwise.
    """
    if not sigma2_hat > 0:
        if T_hat == 0:
            return 0.0, 1.0
        raise ValueError("zero variance estimate with non-zero statistic")
    N = n0 * n1 / (n0 + n1)
    z = np.sqrt(N) * T_hat / np.sqrt(sigma2_hat)
    return float(z), float(2.0 * norm.sf(abs(z)))


def normal_test_batch(T, sigma2, n0: int, n1: int):
    """Vectorised ``z`` and two-sided p-values; zero variance maps to
    ``(0, 1)`` when ``T == 0`` and to ``(+-inf, 0)`` otherwise."""
    T = np.asarray(T, float)
    sigma2 = np.asarray(sigma2, float)
    N = n0 * n1 / (n0 + n1)
    ok = sigma2 > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(ok, np.sqrt(N) * T / np.sqrt(np.where(ok, sigma2, 1.0)),
                     np.sign(T) * np.inf)
    z = np.where(~ok & (T == 0), 0.0, z)
    p = np.where(np.isfinite(z), 2.0 * norm.sf(np.abs(z)), 0.0)
    return z, p


def asymptotic_power(weight_fn, m0, m1, f0, f1, e, lam: float, alpha: float = 0.05,
                     diff_fn=None, scale: float = 1.0, grid=None) -> float:
    """Local asymptotic power of the normalised test for a given weight function.

    Integrals against the averaged-score distribution use the trapezoid rule
    on a 512-point grid over ``[-5, 5]`` unless ``grid`` is given. ``scale``
    multiplies the standardised drift (``sqrt(N)`` turns it into an
    approximate finite-sample power).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    x = np.linspace(-5.0, 5.0, 512) if grid is None else np.asarray(grid, float)
    v0, v1 = np.asarray(m0(x), float), np.asarray(m1(x), float)
    s = v0 - v1 if diff_fn is None else np.asarray(diff_fn(x), float)
    w = np.broadcast_to(np.asarray(weight_fn(x), float), x.shape)
    ex = np.asarray(e(x), float)
    mu = -trapezoid(w * s * ex, x)
    spread = (1 - lam) * v0 * (1 - v0) * ex / f0(x) + lam * v1 * (1 - v1) * ex / f1(x)
    sigma2 = trapezoid(spread * w**2 * ex, x)
    if not sigma2 > 0:
        return float(alpha)
    drift = scale * mu / np.sqrt(sigma2)
    q = norm.ppf(1 - alpha / 2)
    return float(1 - norm.cdf(drift + q) + norm.cdf(drift - q))


def weighted_test(design: DifDesign, y0, y1, weights, item=None,
                  method: str = "np_fixed", residual: bool = False) -> DifResult:
    """Normal-theory test with a given weight vector on the support."""
    m0, m1 = design.curves(y0, y1)
    T = float(test_statistic(m0, m1, weights, design.support))
    est = variance_estimate_residual if residual else variance_estimate
    s2 = float(est(design, y0, y1, weights))
    diag = {
        "weight_divergence": bool(weights_diverged(weights)),
        "support_mass": design.support.total_mass,
    }
    if not s2 > 0 and T != 0:
        diag["degenerate_variance"] = True
        return DifResult(item, method, T, 0.0, float(np.sign(T) * np.inf), 0.0, diag)
    z, p = normalized_statistic(T, s2, design.gs.n0, design.gs.n1)
    if not s2 > 0:
        diag["degenerate_variance"] = True
    return DifResult(item, method, T, max(s2, 0.0), z, p, diag)


def fixed_weight_test(design: DifDesign, y0, y1, item=None) -> DifResult:
    return weighted_test(design, y0, y1, fixed_weights(design.support), item, "np_fixed")


def estimated_weight_statistic(design: DifDesign, y0, y1):
    """Statistic with estimated optimal weights (average squared discrepancy).

    Returns ``(T, weights, diverged)``; each is per column for 2-D input.
    """
    w = estimated_optimal_weights(design, y0, y1)
    m0, m1 = design.curves(y0, y1)
    T = test_statistic(m0, m1, w, design.support)
    return T, w, weights_diverged(w)


def estimated_weight_test(design: DifDesign, y0, y1, item=None) -> DifResult:
    """Estimated optimal weights with normal-theory inference (no bootstrap)."""
    w = estimated_optimal_weights(design, y0, y1)
    return weighted_test(design, y0, y1, w, item, "np_optimal_asymptotic")
