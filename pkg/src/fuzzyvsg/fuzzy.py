"""Fuzzy adaptation of the VSG parameters J, D and k_q.

Inputs are the filtered reactive power (per unit of the rated apparent
power) and the grid R/X ratio. Each input is fuzzified with Gaussian
membership functions, the 2x3 rule grid is fired with the product t-norm,
and each output is defuzzified with the centre-average of singleton
consequents, then clamped to its range.
"""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass, field
from typing import Mapping, Sequence

Q_LABELS = ("VN", "N", "Z")
RX_LABELS = ("M", "H")
OUTPUT_ORDER = ("S", "M", "L", "VL")
OUTPUTS = ("j", "d", "k_q")
KQ_UNITS = ("v_per_var", "per_unit")

# (R/X level, Q_e level) -> consequent label, one table per output
J_RULES = {
    ("M", "VN"): "S", ("M", "N"): "M", ("M", "Z"): "L",
    ("H", "VN"): "S", ("H", "N"): "S", ("H", "Z"): "M",
}
D_RULES = {
    ("M", "VN"): "VL", ("M", "N"): "L", ("M", "Z"): "M",
    ("H", "VN"): "VL", ("H", "N"): "VL", ("H", "Z"): "L",
}
KQ_RULES = {
    ("M", "VN"): "L", ("M", "N"): "M", ("M", "Z"): "S",
    ("H", "VN"): "L", ("H", "N"): "L", ("H", "Z"): "M",
}
RULES = {"j": J_RULES, "d": D_RULES, "k_q": KQ_RULES}

# Flattened cell order used by fire_rules: rows M, H; columns VN, N, Z.
CELLS = tuple((r, q) for r in RX_LABELS for q in Q_LABELS)


@dataclass(frozen=True)
class GaussianMf:
    center: float
    sigma: float
    label: str = ""

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"membership function {self.label!r}: sigma must be positive")

    def __call__(self, x: float) -> float:
        return membership(self, x)


def membership(mf: GaussianMf, x: float) -> float:
    u = (x - mf.center) / mf.sigma
    return math.exp(-0.5 * u * u)


@dataclass(frozen=True)
class RuleTable:
    output: str
    cells: Mapping[tuple[str, str], str]

    def __post_init__(self):
        missing = [c for c in CELLS if c not in self.cells]
        if missing:
            raise ValueError(f"rule table {self.output!r} missing cells {missing}")

    def lookup(self, rx_level: str, q_level: str) -> str:
        return self.cells[(rx_level, q_level)]


@dataclass(frozen=True)
class OutputScale:
    """Linguistic label -> singleton value, with a hard output range."""

    singletons: Mapping[str, float]
    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("output range must satisfy lo <= hi")
        ordered = [self.singletons[k] for k in OUTPUT_ORDER if k in self.singletons]
        unknown = set(self.singletons) - set(OUTPUT_ORDER)
        if unknown:
            raise ValueError(f"unknown output labels {sorted(unknown)}")
        if any(not self.lo <= v <= self.hi for v in ordered):
            raise ValueError(f"singletons {ordered} must lie inside [{self.lo}, {self.hi}]")
        if any(b < a for a, b in zip(ordered, ordered[1:])):
            raise ValueError(f"singletons {ordered} must be non-decreasing in S < M < L < VL")

    def clamp(self, x: float) -> float:
        return min(max(x, self.lo), self.hi)


def default_scales() -> dict[str, OutputScale]:
    return {
        "j": OutputScale({"S": 20.0, "M": 32.5, "L": 45.0}, 20.0, 45.0),
        "d": OutputScale({"M": 140000.0, "L": 165000.0, "VL": 190000.0}, 140000.0, 190000.0),
        "k_q": OutputScale({"S": 0.1, "M": 0.3, "L": 0.5}, 0.1, 0.5),
    }


def default_q_mfs() -> tuple[GaussianMf, ...]:
    return (GaussianMf(-0.5, 0.15, "VN"), GaussianMf(-0.2, 0.15, "N"), GaussianMf(0.0, 0.15, "Z"))


def default_rx_mfs() -> tuple[GaussianMf, ...]:
    return (GaussianMf(1.0, 0.6, "M"), GaussianMf(2.5, 0.6, "H"))


@dataclass(frozen=True)
class FuzzyController:
    q_mfs: tuple[GaussianMf, ...] = field(default_factory=default_q_mfs)
    rx_mfs: tuple[GaussianMf, ...] = field(default_factory=default_rx_mfs)
    tables: Mapping[str, RuleTable] = field(
        default_factory=lambda: {k: RuleTable(k, v) for k, v in RULES.items()}
    )
    scales: Mapping[str, OutputScale] = field(default_factory=default_scales)
    enabled: bool = True
    kq_unit: str = "v_per_var"
    output_lag_s: float = 0.0  # optional first-order smoothing of adapted parameters; 0 disables

    def __post_init__(self):
        if tuple(mf.label for mf in self.q_mfs) != Q_LABELS:
            raise ValueError(f"q_e membership functions must be labelled {Q_LABELS}")
        if tuple(mf.label for mf in self.rx_mfs) != RX_LABELS:
            raise ValueError(f"r_over_x membership functions must be labelled {RX_LABELS}")
        if self.rx_mfs[0].sigma != self.rx_mfs[1].sigma:
            raise ValueError("the two r_over_x membership functions must share one sigma")
        if set(self.tables) != set(OUTPUTS) or set(self.scales) != set(OUTPUTS):
            raise ValueError(f"tables and scales must cover outputs {OUTPUTS}")
        for name, table in self.tables.items():
            for cell in CELLS:
                if table.lookup(*cell) not in self.scales[name].singletons:
                    raise ValueError(f"{name}: label {table.lookup(*cell)!r} has no singleton")
        if self.kq_unit not in KQ_UNITS:
            raise ValueError(f"kq_unit must be one of {KQ_UNITS}")
        if not self.output_lag_s >= 0:
            raise ValueError("output_lag_s must be non-negative")
        # per-output singleton value for each flattened cell, precomputed for the step loop
        object.__setattr__(
            self,
            "_cell_values",
            {
                name: tuple(self.scales[name].singletons[self.tables[name].lookup(*c)] for c in CELLS)
                for name in OUTPUTS
            },
        )

    def cell_values(self, output: str) -> tuple[float, ...]:
        return self._cell_values[output]


def default_controller(enabled: bool = True) -> FuzzyController:
    return FuzzyController(enabled=enabled)


def fire_rules(ctrl: FuzzyController, q_e_pu: float, r_over_x: float) -> tuple[float, ...]:
    """Product t-norm firing strengths in CELLS order."""
    mq = [membership(mf, q_e_pu) for mf in ctrl.q_mfs]
    mr = [membership(mf, r_over_x) for mf in ctrl.rx_mfs]
    return tuple(r * q for r in mr for q in mq)


def defuzzify(strengths: Sequence[float], singletons: Sequence[float], lo: float, hi: float) -> float:
    total = sum(strengths)
    if not total > 0:
        raise ValueError("no rule fired")
    value = sum(map(operator.mul, strengths, singletons)) / total
    return min(max(value, lo), hi)


def crisp_outputs(ctrl: FuzzyController, q_e_pu: float, r_over_x: float) -> tuple[float, float, float]:
    """Crisp (J, D, k_q) with k_q in the scale's own units."""
    w = fire_rules(ctrl, q_e_pu, r_over_x)
    out = []
    for name in OUTPUTS:
        sc = ctrl.scales[name]
        out.append(defuzzify(w, ctrl.cell_values(name), sc.lo, sc.hi))
    return out[0], out[1], out[2]


def adapt(
    ctrl: FuzzyController,
    q_e_f: float,
    s_base: float,
    r_over_x: float,
    e_0: float,
    baseline: tuple[float, float, float],
) -> tuple[float, float, float]:
    """Adapted (j, d, k_q) for the next step; ``baseline`` when disabled.

    k_q is returned in V/Var. With ``kq_unit == "per_unit"`` the crisp
    output is treated as a per-unit droop and scaled by e_0 / s_base.
    """
    if not s_base > 0:
        raise ValueError("s_base must be positive")
    if not ctrl.enabled:
        return baseline
    j, d, kq = crisp_outputs(ctrl, q_e_f / s_base, r_over_x)
    if ctrl.kq_unit == "per_unit":
        kq = kq * e_0 / s_base
    return j, d, kq
