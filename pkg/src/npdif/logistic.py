"""Logistic-regression DIF detection with a 2-df likelihood-ratio test."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, gammaincc

from .statistic import DifResult

MAX_ITER = 100
GRAD_TOL = 1e-8
SEPARATION_BOUND = 30.0


@dataclass
class LogisticFit:
    coefficients: np.ndarray
    log_likelihood: float
    converged: bool
    iterations: int
    diagnostics: dict = field(default_factory=dict)


def _loglik(X, y, beta):
    eta = X @ beta
    # log(1 + exp(eta)) computed stably
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def fit_logistic(design, y, max_iter: int = MAX_ITER, tol: float = GRAD_TOL) -> LogisticFit:
    """Maximum-likelihood logistic regression by Newton-Raphson (IRLS).

    Steps are halved until the log-likelihood does not decrease. The fit is
    flagged as separated when a coefficient exceeds 30 in magnitude.
    """
    X = np.asarray(design, float)
    y = np.asarray(y, float)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ValueError("design must be n x k with one row per response")
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise ValueError("design matrix is not of full column rank")
    beta = np.zeros(X.shape[1])
    ll = _loglik(X, y, beta)
    diag = {}
    for it in range(1, max_iter + 1):
        p = expit(X @ beta)
        grad = X.T @ (y - p)
        if np.max(np.abs(grad)) < tol:
            return LogisticFit(beta, ll, True, it - 1, diag)
        hess = (X * (p * (1 - p))[:, None]).T @ X
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(hess, grad, rcond=None)[0]
        t = 1.0
        while True:
            cand = beta + t * step
            ll_c = _loglik(X, y, cand)
            if ll_c >= ll - 1e-12 or t < 1e-10:
                break
            t /= 2
        beta, ll = cand, ll_c
        if np.max(np.abs(beta)) > SEPARATION_BOUND:
            diag["separation"] = True
            return LogisticFit(beta, ll, False, it, diag)
    p = expit(X @ beta)
    converged = bool(np.max(np.abs(X.T @ (y - p))) < tol)
    return LogisticFit(beta, ll, converged, max_iter, diag)


def chi2_sf(x: float, df: int) -> float:
    """Upper tail of the chi-square distribution (regularised incomplete gamma)."""
    if x <= 0:
        return 1.0
    return float(gammaincc(df / 2.0, x / 2.0))


def lrt_dif(scores, group, responses, item=None) -> DifResult:
    """Joint uniform + non-uniform DIF test.

    Compares ``logit P = b0 + b1*theta + b2*g + b3*theta*g`` against
    ``logit P = b0 + b1*theta`` with a chi-square test on 2 degrees of freedom.
    """
    theta = np.asarray(scores, float)
    g = np.asarray(group, float)
    y = np.asarray(responses, float)
    ones = np.ones_like(theta)
    null = fit_logistic(np.column_stack([ones, theta]), y)
    full = fit_logistic(np.column_stack([ones, theta, g, theta * g]), y)
    chi2 = max(2.0 * (full.log_likelihood - null.log_likelihood), 0.0)
    diag = {"converged": null.converged and full.converged}
    if "separation" in null.diagnostics or "separation" in full.diagnostics:
        diag["separation"] = True
    return DifResult(item, "logistic", chi2, np.nan, np.nan, chi2_sf(chi2, 2), diag)
