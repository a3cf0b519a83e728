"""Monte Carlo runner for rejection rates, power and weight-estimation error.

Every replicate draws from its own seed substream keyed by
``(scenario, n, replicate)``, and tallies are summed in replicate order, so
reports do not depend on how replicates are spread over workers.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed
from scipy.stats import norm

from . import statistic as st
from .bootstrap import BootstrapConfig, wild_bootstrap_test
from .data import split_groups, standardized_total_score
from .logistic import lrt_dif
from .simulation import DIF_SOURCES, Scenario, dif_scenario, generate_test, irc_true
from .smoothing import SmoothingConfig, kde_density, nn_weight_matrix
from .support import DEFAULT_SUPPORT_SIZE, build_support

DEFAULT_SAMPLE_SIZES = (50, 100, 200, 300, 400)
DEFAULT_ZETAS = (0.260, 7 / 24, 0.320)
DEFAULT_METHODS = ("np_fixed", "np_optimal_true", "np_optimal_boot", "logistic")
WEIGHT_METHODS = ("np_optimal_asymptotic", "np_optimal_boot")
CURVE_GRID = np.round(np.linspace(-2.5, 2.5, 51), 10)

REPORT_COLUMNS = (
    "scenario", "n", "zeta", "method", "power", "power_se", "rejection_rate",
    "rejection_se", "rmse_weights", "diverged", "replications", "seed",
)


@dataclass
class ExperimentGrid:
    scenarios: list = field(default_factory=lambda: [s for s in DIF_SOURCES if s != "none"])
    sample_sizes: list = field(default_factory=lambda: list(DEFAULT_SAMPLE_SIZES))
    zetas: list = field(default_factory=lambda: list(DEFAULT_ZETAS))
    methods: list = field(default_factory=lambda: list(DEFAULT_METHODS))
    replications: int = 100
    alpha: float = 0.05
    seed: int = 0
    bootstrap: int = 500
    support_size: int | None = DEFAULT_SUPPORT_SIZE
    kernel: str = "epanechnikov"
    rmse_points: str = "support"

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if not self.methods:
            raise ValueError("at least one method is required")
        for m in self.methods:
            if m not in st.METHODS:
                raise ValueError(f"unknown method {m!r}; expected one of {st.METHODS}")
        for s in self.scenarios:
            name = s.dif_source if isinstance(s, Scenario) else s
            if name not in DIF_SOURCES:
                raise ValueError(f"unknown scenario {name!r}; expected one of {DIF_SOURCES}")
        if self.rmse_points not in ("support", "grid"):
            raise ValueError("rmse_points must be 'support' or 'grid'")

    def scenario_objects(self) -> list[Scenario]:
        return [s if isinstance(s, Scenario) else dif_scenario(s) for s in self.scenarios]

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentGrid":
        d = dict(d)
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown grid keys: {sorted(unknown)}")
        if "scenarios" in d:
            d["scenarios"] = [Scenario.from_dict(s) if isinstance(s, dict) else s
                              for s in d["scenarios"]]
        return cls(**d)


@dataclass
class ConditionMetrics:
    scenario: str
    n: int
    zeta: float
    method: str
    power: float
    power_se: float
    rejection_rate: float
    rejection_se: float
    rmse_weights: float | None
    replicate_count: int
    diverged_count: int
    seed: int
    curve: dict | None = None

    def row(self) -> dict:
        return {
            "scenario": self.scenario, "n": self.n, "zeta": self.zeta,
            "method": self.method, "power": self.power, "power_se": self.power_se,
            "rejection_rate": self.rejection_rate, "rejection_se": self.rejection_se,
            "rmse_weights": self.rmse_weights, "diverged": self.diverged_count,
            "replications": self.replicate_count, "seed": self.seed,
        }


def rmse_weights(estimated, true, mass=None) -> float:
    """Root mean squared difference between estimated and true weights.

    ``mass`` optionally weights the evaluation points (support multiplicities).
    """
    est = np.asarray(estimated, float)
    tru = np.asarray(true, float)
    if est.shape != tru.shape:
        raise ValueError("estimated and true weights must be aligned")
    w = np.ones_like(est) if mass is None else np.asarray(mass, float)
    return float(np.sqrt(np.sum(w * (est - tru) ** 2) / np.sum(w)))


def _averaged_density(x):
    # Mean of two independent N(0, 1) draws is N(0, 1/2).
    return norm.pdf(x, scale=np.sqrt(0.5))


def true_weight_fn(scenario: Scenario, lam: float):
    """Optimal weights of the scenario's DIF item as a function of the criterion.

    Curves are evaluated with the criterion standing in for the latent trait;
    both trait densities are standard normal.
    """
    ref, foc = scenario.reference_params, scenario.focal_params

    def fn(x):
        x = np.asarray(x, float)
        m0, m1 = irc_true(ref, x), irc_true(foc, x)
        e = _averaged_density(x)
        f = norm.pdf(x)
        denom = (1 - lam) * m0 * (1 - m0) * e / f + lam * m1 * (1 - m1) * e / f
        return (m0 - m1) / np.maximum(denom, st.DENOMINATOR_FLOOR)

    return fn


def _seed_for(grid_seed: int, scenario_idx: int, n: int, rep: int, *tail: int):
    return np.random.SeedSequence(grid_seed, spawn_key=(scenario_idx, n, rep) + tail)


def _replicate(grid: ExperimentGrid, scenario: Scenario, scenario_idx: int, n: int, rep: int):
    """Run every (zeta, method) on one simulated data set.

    Returns ``{(zeta_idx, method): tally}``.
    """
    sc = scenario.with_n(n)
    sim = generate_test(sc, np.random.default_rng(_seed_for(grid.seed, scenario_idx, n, rep, 0)))
    rm = sim.responses
    scores = standardized_total_score(rm)
    gs = split_groups(rm, scores)
    support = build_support(gs, grid.support_size,
                            np.random.default_rng(_seed_for(grid.seed, scenario_idx, n, rep, 1)))
    Y = rm.responses.astype(float)
    Y0, Y1 = Y[rm.group == 0], Y[rm.group == 1]
    dif = sim.dif_item
    nondif = [i for i in range(rm.n_items) if i != dif]
    out = {}

    logistic = None
    if "logistic" in grid.methods:
        logistic = np.array([lrt_dif(scores, rm.group, Y[:, i]).p_value for i in range(rm.n_items)])

    for zi, zeta in enumerate(grid.zetas):
        cfg = SmoothingConfig(grid.kernel, zeta)
        try:
            design = st.DifDesign(gs, cfg, support)
        except ValueError:
            for m in grid.methods:
                out[(zi, m)] = _tally(None, None, dif, nondif, grid.alpha, failed=True)
            continue
        true_w = None
        if sc.has_dif:
            true_w = true_weight_fn(sc, gs.lambda_hat)
        for m in grid.methods:
            div = np.zeros(rm.n_items, dtype=bool)
            rmse = curve = None
            if m == "logistic":
                p = logistic
            elif m == "np_fixed":
                w = st.fixed_weights(support)
                m0, m1 = design.curves(Y0, Y1)
                T = st.test_statistic(m0, m1, w, support)
                s2 = st.variance_estimate(design, Y0, Y1, w)
                p = st.normal_test_batch(T, s2, gs.n0, gs.n1)[1]
            elif m == "np_optimal_true":
                p = np.ones(rm.n_items)
                if dif is not None:
                    w = true_w(support.points)
                    res = st.weighted_test(design, Y0[:, dif], Y1[:, dif], w,
                                           method="np_optimal_true")
                    p[dif] = res.p_value
            else:
                W = st.estimated_optimal_weights(design, Y0, Y1)
                div = np.atleast_1d(st.weights_diverged(W))
                if m == "np_optimal_asymptotic":
                    m0, m1 = design.curves(Y0, Y1)
                    T = st.test_statistic(m0, m1, W, support)
                    s2 = st.variance_estimate(design, Y0, Y1, W)
                    p = st.normal_test_batch(T, s2, gs.n0, gs.n1)[1]
                else:
                    bseed = _seed_for(grid.seed, scenario_idx, n, rep, 2, zi)
                    bcfg = BootstrapConfig(grid.bootstrap, bseed)
                    p = np.array([
                        wild_bootstrap_test(design, Y0[:, i], Y1[:, i], bcfg, item=i).p_value
                        for i in range(rm.n_items)
                    ])
                if dif is not None:
                    rmse, curve = _weight_error(grid, design, Y0[:, dif], Y1[:, dif],
                                                W[:, dif], true_w, cfg)
            out[(zi, m)] = _tally(p, div, dif, nondif, grid.alpha, rmse=rmse, curve=curve)
    return out


def _weight_error(grid, design, y0, y1, w_support, true_w, cfg):
    gs = design.gs
    x = CURVE_GRID
    W0 = nn_weight_matrix(gs.theta0, x, cfg, strict=False)
    W1 = nn_weight_matrix(gs.theta1, x, cfg, strict=False)
    m0, m1 = y0 @ W0, y1 @ W1
    f0, f1 = kde_density(gs.theta0, x), kde_density(gs.theta1, x)
    sup = design.support
    e = kde_density(sup.points, x, weights=sup.multiplicities) if len(sup) > 1 else np.ones_like(x)
    curve, _ = st._optimal_ratio(m0 - m1, m0 * (1 - m0), m1 * (1 - m1), f0, f1, e, gs.lambda_hat)
    if grid.rmse_points == "support":
        rmse = rmse_weights(w_support, true_w(sup.points), sup.multiplicities)
    else:
        ok = np.isfinite(curve)
        rmse = rmse_weights(curve[ok], true_w(x)[ok])
    return rmse, curve


def _tally(p, div, dif, nondif, alpha, rmse=None, curve=None, failed=False):
    if failed:
        return {"excluded": True, "failed": True}
    excluded = bool(np.any(div))
    t = {"excluded": excluded, "failed": False}
    if excluded:
        return t
    rej = np.asarray(p) < alpha
    t["dif_reject"] = None if dif is None else bool(rej[dif])
    t["nondif_reject"] = int(np.count_nonzero(rej[nondif]))
    t["nondif_total"] = len(nondif)
    t["rmse"] = rmse
    t["curve"] = curve
    return t


def _run_chunk(grid, scenario, scenario_idx, n, reps):
    return [_replicate(grid, scenario, scenario_idx, n, r) for r in reps]


def _aggregate(grid, scenario, n, zi, method, tallies) -> ConditionMetrics:
    kept = [t for t in tallies if not t["excluded"]]
    diverged = len(tallies) - len(kept)
    dif = [t["dif_reject"] for t in kept if t["dif_reject"] is not None]
    power = float(np.mean(dif)) if dif else math.nan
    power_se = float(math.sqrt(power * (1 - power) / len(dif))) if dif else math.nan
    rej_total = sum(t["nondif_total"] for t in kept)
    if rej_total:
        per_rep = np.array([t["nondif_reject"] / t["nondif_total"] for t in kept])
        rate = float(sum(t["nondif_reject"] for t in kept) / rej_total)
        rate_se = float(per_rep.std(ddof=1) / math.sqrt(per_rep.size)) if per_rep.size > 1 else math.nan
    else:
        rate = rate_se = math.nan
    rmses = [t["rmse"] for t in kept if t.get("rmse") is not None]
    rmse = float(np.mean(rmses)) if rmses else None
    curve = None
    curves = [t["curve"] for t in kept if t.get("curve") is not None]
    if curves:
        C = np.vstack(curves)
        cnt = np.sum(np.isfinite(C), axis=0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            mean = np.nanmean(C, axis=0)
            sd = np.nanstd(C, axis=0, ddof=1)
        half = 1.96 * sd / np.sqrt(np.maximum(cnt, 1))
        true_w = true_weight_fn(scenario.with_n(n), 0.5)(CURVE_GRID)
        curve = {"x": CURVE_GRID.tolist(), "mean": mean.tolist(), "lower": (mean - half).tolist(),
                 "upper": (mean + half).tolist(), "true": true_w.tolist()}
    return ConditionMetrics(scenario.dif_source, n, float(grid.zetas[zi]), method, power, power_se,
                            rate, rate_se, rmse, len(kept), diverged, grid.seed, curve)


def run_condition(grid: ExperimentGrid, scenario: Scenario | str, n: int, jobs: int = 1):
    """Run all replicates of one (scenario, n) cell.

    Returns ConditionMetrics for every ``(zeta, method)`` pair, zetas outer.
    """
    if isinstance(scenario, str):
        scenario = dif_scenario(scenario)
    scenario_code = DIF_SOURCES.index(scenario.dif_source)
    reps = list(range(grid.replications))
    if jobs == 1:
        tallies = _run_chunk(grid, scenario, scenario_code, n, reps)
    else:
        chunks = [reps[i::jobs] for i in range(jobs)]
        parts = Parallel(n_jobs=jobs)(
            delayed(_run_chunk)(grid, scenario, scenario_code, n, c) for c in chunks if c
        )
        by_rep = {}
        for c, part in zip([c for c in chunks if c], parts):
            by_rep.update(zip(c, part))
        tallies = [by_rep[r] for r in reps]
    metrics = []
    for zi in range(len(grid.zetas)):
        for m in grid.methods:
            metrics.append(_aggregate(grid, scenario, n, zi, m, [t[(zi, m)] for t in tallies]))
    return metrics


def run_grid(grid: ExperimentGrid, jobs: int = 1) -> list[ConditionMetrics]:
    out = []
    for sc in grid.scenario_objects():
        for n in grid.sample_sizes:
            out.extend(run_condition(grid, sc, n, jobs))
    return out


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(round(v, 10))
    return str(v)


def report_csv(metrics: list[ConditionMetrics]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for m in metrics:
        r = m.row()
        w.writerow([_fmt(r[c]) for c in REPORT_COLUMNS])
    return buf.getvalue()


def report_json(metrics: list[ConditionMetrics], grid: ExperimentGrid | None = None) -> str:
    def clean(v):
        if isinstance(v, float) and math.isnan(v):
            return None
        if isinstance(v, float):
            return round(v, 10)
        if isinstance(v, list):
            return [clean(x) for x in v]
        if isinstance(v, dict):
            return {k: clean(x) for k, x in v.items()}
        return v

    conditions = []
    for m in metrics:
        d = m.row()
        d["weight_curve"] = m.curve
        conditions.append(clean(d))
    doc = {"conditions": conditions}
    if grid is not None:
        doc["grid"] = {
            "scenarios": [s.dif_source for s in grid.scenario_objects()],
            "sample_sizes": list(grid.sample_sizes), "zetas": list(grid.zetas),
            "methods": list(grid.methods), "replications": grid.replications,
            "alpha": grid.alpha, "seed": grid.seed, "bootstrap": grid.bootstrap,
            "support_size": grid.support_size, "kernel": grid.kernel,
            "rmse_points": grid.rmse_points,
        }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def emit_report(metrics: list[ConditionMetrics], out_dir, grid: ExperimentGrid | None = None):
    """Write ``report.csv`` and ``report.json`` into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.csv").write_text(report_csv(metrics), encoding="utf-8")
    (out / "report.json").write_text(report_json(metrics, grid), encoding="utf-8")
    return out / "report.csv", out / "report.json"
