"""Per-item DIF analysis of an observed response matrix."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from . import statistic as st
from .bootstrap import BootstrapConfig, wild_bootstrap_test
from .data import ResponseMatrix, split_groups, standardized_total_score
from .logistic import lrt_dif
from .smoothing import SmoothingConfig, nn_weight_matrix
from .support import DEFAULT_SUPPORT_SIZE, build_support

ANALYZE_METHODS = ("np_fixed", "np_optimal_boot", "logistic")
DEFAULT_ZETAS = (0.260, 7 / 24, 0.320)
CURVE_POINTS = 101


@dataclass
class AnalysisConfig:
    zetas: list = field(default_factory=lambda: list(DEFAULT_ZETAS))
    kernel: str = "epanechnikov"
    methods: list = field(default_factory=lambda: list(ANALYZE_METHODS))
    alpha: float = 0.05
    support_size: int | None = DEFAULT_SUPPORT_SIZE
    bootstrap: int = 500
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if not self.methods:
            raise ValueError("at least one method must be selected")
        for m in self.methods:
            if m not in st.METHODS or m == "np_optimal_true":
                raise ValueError(f"method {m!r} is not available for observed data")
        if not self.zetas:
            raise ValueError("at least one zeta is required")


def _item_rows(rm, scores, designs, cfg: AnalysisConfig, i):
    y = rm.responses[:, i].astype(float)
    y0, y1 = y[rm.group == 0], y[rm.group == 1]
    name = rm.item_names[i]
    rows = []
    for m in cfg.methods:
        if m == "logistic":
            res = lrt_dif(scores, rm.group, y, item=name)
            rows.append((None, res))
            continue
        for zi, (zeta, design) in enumerate(designs):
            if m == "np_fixed":
                res = st.fixed_weight_test(design, y0, y1, item=name)
            elif m == "np_optimal_asymptotic":
                res = st.estimated_weight_test(design, y0, y1, item=name)
            else:
                seed = np.random.SeedSequence(cfg.seed, spawn_key=(zi,))
                res = wild_bootstrap_test(design, y0, y1, BootstrapConfig(cfg.bootstrap, seed),
                                          item=i, label=name)
            rows.append((zeta, res))
    return rows


def analyze(rm: ResponseMatrix, cfg: AnalysisConfig, jobs: int = 1):
    """Run every selected method on every item.

    Returns a list of flat result rows ordered by item, then method, then zeta.
    Bootstrap draws depend only on ``(seed, zeta index, item, replicate)``.
    """
    scores = standardized_total_score(rm)
    gs = split_groups(rm, scores)
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(10**6,)))
    support = build_support(gs, cfg.support_size, rng)
    designs = [(z, st.DifDesign(gs, SmoothingConfig(cfg.kernel, z), support)) for z in cfg.zetas]
    if jobs == 1:
        per_item = [_item_rows(rm, scores, designs, cfg, i) for i in range(rm.n_items)]
    else:
        per_item = Parallel(n_jobs=jobs)(
            delayed(_item_rows)(rm, scores, designs, cfg, i) for i in range(rm.n_items)
        )
    out = []
    for rows in per_item:
        for zeta, res in rows:
            row = res.as_row()
            row["zeta"] = zeta
            row["dif"] = bool(res.p_value < cfg.alpha)
            out.append(row)
    return out


def curve_data(rm: ResponseMatrix, cfg: AnalysisConfig, n_points: int = CURVE_POINTS):
    """Smoothed curves of both groups on an equispaced grid, per item and zeta."""
    scores = standardized_total_score(rm)
    grid = np.linspace(scores.min(), scores.max(), n_points)
    rows = []
    for zeta in cfg.zetas:
        scfg = SmoothingConfig(cfg.kernel, zeta)
        for g in (0, 1):
            sel = rm.group == g
            W = nn_weight_matrix(scores[sel], grid, scfg, strict=False)
            M = rm.responses[sel].astype(float).T @ W
            for i, name in enumerate(rm.item_names):
                for x, m in zip(grid, M[i]):
                    rows.append({"item": name, "zeta": zeta, "group": g, "x": float(x),
                                 "m_hat": float(m)})
    return rows


def empirical_points(rm: ResponseMatrix, n_bins: int = 10):
    """Observed proportions per group within deciles of the pooled criterion."""
    scores = standardized_total_score(rm)
    edges = np.unique(np.quantile(scores, np.linspace(0, 1, n_bins + 1)))
    bins = np.clip(np.searchsorted(edges, scores, side="right") - 1, 0, max(edges.size - 2, 0))
    rows = []
    for i, name in enumerate(rm.item_names):
        for g in (0, 1):
            for b in np.unique(bins):
                sel = (bins == b) & (rm.group == g)
                if not sel.any():
                    continue
                rows.append({"item": name, "group": g, "bin": int(b),
                             "x": float(scores[sel].mean()),
                             "proportion": float(rm.responses[sel, i].mean()),
                             "count": int(sel.sum())})
    return rows
