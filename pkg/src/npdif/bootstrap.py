"""Wild bootstrap for the estimated-optimal-weight statistic.

Bootstrap responses are Bernoulli draws from a pooled (no-DIF) curve fit.
Matching scores are fixed covariates and are never recomputed from the
resampled responses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import ResponseMatrix
from .smoothing import SmoothingConfig, nn_weight_matrix
from .statistic import DifDesign, DifResult, estimated_weight_statistic


@dataclass(frozen=True)
class BootstrapConfig:
    B: int = 500
    seed: int | np.random.SeedSequence = 0

    def __post_init__(self):
        if self.B < 1:
            raise ValueError("number of bootstrap samples B must be >= 1")


def pooled_irc(item: int, rm: ResponseMatrix, scores, cfg: SmoothingConfig) -> np.ndarray:
    """Common curve fitted to both groups, evaluated at every respondent.

    ECDF and bandwidth come from the pooled sample of size ``n``.
    """
    scores = np.asarray(scores, float)
    y = rm.responses[:, rm.item_index(item)].astype(float)
    pooled_cfg = SmoothingConfig(cfg.kernel, cfg.zeta, "pooled")
    W = nn_weight_matrix(scores, scores, pooled_cfg, scores.size)
    return _fit(y, W)


def _fit(y, W):
    # a / (a + b) is exactly 0 or 1 when the responses are constant
    a, b = y @ W, (1.0 - y) @ W
    return a / (a + b)


def substream(seed, *key: int) -> np.random.Generator:
    """Generator for the substream identified by ``key`` under ``seed``."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return np.random.default_rng(
        np.random.SeedSequence(ss.entropy, spawn_key=tuple(ss.spawn_key) + tuple(key))
    )


def draw_bootstrap_responses(fitted, B: int, seed, item: int) -> np.ndarray:
    """``(n, B)`` Bernoulli draws; column ``b`` uses substream ``(item, b)``."""
    fitted = np.asarray(fitted, float)
    out = np.empty((fitted.size, B), dtype=float)
    for b in range(B):
        out[:, b] = substream(seed, item, b).random(fitted.size) < fitted
    return out


def bootstrap_pvalue(T_hat: float, T_boot) -> float:
    """Share of bootstrap statistics strictly above the observed one."""
    T_boot = np.asarray(T_boot, float)
    return float(np.count_nonzero(T_hat < T_boot) / T_boot.size)


def wild_bootstrap_test(design: DifDesign, y0, y1, bcfg: BootstrapConfig,
                        item: int = 0, label=None) -> DifResult:
    """Estimated-optimal-weight test calibrated by the wild bootstrap.

    ``item`` keys the random substreams; ``label`` is reported as the item.
    """
    y0 = np.asarray(y0, float)
    y1 = np.asarray(y1, float)
    T, w, diverged = estimated_weight_statistic(design, y0, y1)
    T = float(T)
    diag = {
        "weight_divergence": bool(diverged),
        "support_mass": design.support.total_mass,
        "bootstrap_replicates": bcfg.B,
    }
    label = item if label is None else label
    y = np.concatenate([y0, y1])
    fitted = _fit(y, design.pooled_weights)
    if np.all(fitted == fitted[0]) and fitted[0] in (0.0, 1.0):
        diag["degenerate_null_fit"] = True
        return DifResult(label, "np_optimal_boot", T, np.nan, np.nan, 1.0, diag)
    ystar = draw_bootstrap_responses(fitted, bcfg.B, bcfg.seed, item)
    n0 = design.gs.n0
    T_boot, _, div_boot = estimated_weight_statistic(design, ystar[:n0], ystar[n0:])
    diag["bootstrap_divergences"] = int(np.count_nonzero(div_boot))
    return DifResult(label, "np_optimal_boot", T, np.nan, np.nan,
                     bootstrap_pvalue(T, T_boot), diag)


def wild_bootstrap_pvalue(item, rm: ResponseMatrix, design: DifDesign,
                          bcfg: BootstrapConfig) -> DifResult:
    """Bootstrap test of one item of a response matrix.

    ``design`` must have been built from the same respondents' scores.
    """
    idx = rm.item_index(item)
    y = rm.responses[:, idx]
    return wild_bootstrap_test(design, y[rm.group == 0], y[rm.group == 1], bcfg,
                               item=idx, label=rm.item_names[idx])
