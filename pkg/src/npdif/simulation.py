"""Response generation from the extended 4PL model and DIF scenarios."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.integrate import trapezoid
from scipy.special import expit
from scipy.stats import norm

from .data import ResponseMatrix

N_ITEMS = 20
DIF_ITEM = 0


@dataclass(frozen=True)
class ItemParams:
    """Extended 4PL parameters; ``e``, ``f``, ``g`` add higher-order bends."""

    a: float = 1.0
    b: float = 0.0
    c: float = 0.0
    d: float = 1.0
    e: float = 0.0
    f: float = 0.0
    g: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.a):
            raise ValueError("discrimination must be finite")


def irc_true(p: ItemParams, theta):
    """``c + (d - c) * expit(a * (theta - b - e theta^2 - f theta^3 - g theta^5))``."""
    t = np.asarray(theta, float)
    eta = p.a * (t - p.b - p.e * t**2 - p.f * t**3 - p.g * t**5)
    out = p.c + (p.d - p.c) * expit(eta)
    return out if out.ndim else float(out)


# Reference and focal rows of each DIF source.
_TABLE = {
    "a": ((0.42, 0.00, 0.00, 1.00, 0.00, 0.00, 0.00),
          (2.00, 0.00, 0.00, 1.00, 0.00, 0.00, 0.00)),
    "b": ((1.00, 0.00, 0.00, 1.00, 0.00, 0.00, 0.00),
          (1.00, 1.00, 0.00, 1.00, 0.00, 0.00, 0.00)),
    "c": ((1.00, 0.00, 0.00, 1.00, 0.00, 0.00, 0.00),
          (1.00, 0.00, 0.39, 1.00, 0.00, 0.00, 0.00)),
    "d": ((1.00, 0.00, 0.00, 0.61, 0.00, 0.00, 0.00),
          (1.00, 0.00, 0.00, 1.00, 0.00, 0.00, 0.00)),
    "mix1": ((1.90, 0.28, 0.07, 1.00, 1.00, -0.70, 0.00),
             (0.35, -1.75, 0.03, 0.98, 1.60, -0.90, 0.00)),
    "mix2": ((4.20, 0.00, 0.10, 0.85, 0.00, -0.50, -0.50),
             (0.18, -1.50, 0.00, 1.00, 1.00, -1.20, -0.50)),
}
DIF_SOURCES = tuple(_TABLE) + ("none",)


@dataclass(frozen=True)
class Scenario:
    """One simulated test: a single DIF item plus non-DIF 4PL items.

    ``reference_params``/``focal_params`` describe the DIF item; for
    ``dif_source="none"`` they are ``None`` and every item is non-DIF.
    """

    dif_source: str
    reference_params: ItemParams | None = None
    focal_params: ItemParams | None = None
    n_items: int = N_ITEMS
    n: int = 200
    n_focal: int | None = None
    dif_item: int = DIF_ITEM

    def __post_init__(self):
        if self.dif_source not in DIF_SOURCES:
            raise ValueError(f"unknown DIF source {self.dif_source!r}; expected one of {DIF_SOURCES}")
        if self.dif_source == "none" and self.reference_params != self.focal_params:
            raise ValueError("a no-DIF scenario needs identical group parameters")
        if self.n_items < 1 or not 0 <= self.dif_item < self.n_items:
            raise ValueError("dif_item must index one of n_items items")

    @property
    def has_dif(self) -> bool:
        return self.dif_source != "none"

    @property
    def group_sizes(self) -> tuple[int, int]:
        n1 = self.n // 2 if self.n_focal is None else self.n_focal
        return self.n - n1, n1

    def with_n(self, n: int) -> "Scenario":
        return replace(self, n=n)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        d = dict(d)
        source = d.pop("dif_source")
        base = dif_scenario(source)
        for key in ("reference_params", "focal_params"):
            if d.get(key) is not None:
                d[key] = ItemParams(**d[key])
            else:
                d[key] = getattr(base, key)
        return cls(dif_source=source, **d)


def dif_scenario(source: str, n: int = 200) -> Scenario:
    """Scenario with the tabulated DIF item parameters for ``source``."""
    if source == "none":
        return Scenario("none", n=n)
    if source not in _TABLE:
        raise ValueError(f"unknown DIF source {source!r}; expected one of {DIF_SOURCES}")
    ref, foc = _TABLE[source]
    return Scenario(source, ItemParams(*ref), ItemParams(*foc), n=n)


def draw_non_dif_params(rng) -> ItemParams:
    """4PL parameters with ``a~N(1.1,.3)``, ``b~N(0,1.1)``, ``c~N(.2,.05)``, ``d~N(.8,.05)``.

    Out-of-range draws are clamped: ``c`` to ``[0, d]``, then ``d`` to ``[c, 1]``.
    """
    return _draw_clamped(np.random.default_rng(rng))[0]


def _draw_clamped(rng):
    a, b, c0, d0 = rng.normal((1.1, 0.0, 0.2, 0.8), (0.3, 1.1, 0.05, 0.05))
    d = min(d0, 1.0)
    c = min(max(c0, 0.0), d)
    d = min(max(d, c), 1.0)
    return ItemParams(float(a), float(b), float(c), float(d)), (c != c0 or d != d0)


@dataclass
class SimulatedTest:
    """Generated responses together with the parameters that produced them."""

    responses: ResponseMatrix
    theta: np.ndarray
    params: list = field(default_factory=list)  # (reference, focal) per item
    dif_item: int | None = None
    clamped: int = 0


def generate_test(scenario: Scenario, rng) -> SimulatedTest:
    rng = np.random.default_rng(rng)
    n0, n1 = scenario.group_sizes
    group = np.r_[np.zeros(n0, dtype=np.int8), np.ones(n1, dtype=np.int8)]
    theta = rng.standard_normal(n0 + n1)
    params = []
    clamped = 0
    for i in range(scenario.n_items):
        if scenario.has_dif and i == scenario.dif_item:
            params.append((scenario.reference_params, scenario.focal_params))
        else:
            p, hit = _draw_clamped(rng)
            clamped += hit
            params.append((p, p))
    prob = np.empty((n0 + n1, scenario.n_items))
    for i, (pr, pf) in enumerate(params):
        prob[:n0, i] = irc_true(pr, theta[:n0])
        prob[n0:, i] = irc_true(pf, theta[n0:])
    y = (rng.random(prob.shape) < prob).astype(np.int8)
    names = tuple(f"item{i + 1}" for i in range(scenario.n_items))
    return SimulatedTest(ResponseMatrix(y, names, group), theta, params,
                         scenario.dif_item if scenario.has_dif else None, clamped)


def generate_responses(scenario: Scenario, rng) -> ResponseMatrix:
    """Simulated responses; respondents ``0..n0-1`` form the reference group."""
    return generate_test(scenario, rng).responses


def weighted_unsigned_area(p_ref: ItemParams, p_foc: ItemParams, density=norm.pdf) -> float:
    """Density-weighted area between two curves on ``[-6, 6]`` (1201 points)."""
    t = np.linspace(-6.0, 6.0, 1201)
    gap = np.abs(irc_true(p_ref, t) - irc_true(p_foc, t))
    return float(trapezoid(gap * density(t), t))
