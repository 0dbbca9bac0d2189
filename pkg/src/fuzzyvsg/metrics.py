"""Steady-state values, overshoot, power angle and delivery gain from runs."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .engine import RunResult


class NotSettled(ValueError):
    pass


@dataclass(frozen=True)
class SteadyStateWindow:
    fraction: float = 0.1
    flatness_tol: float = 0.02

    def __post_init__(self):
        if not 0 < self.fraction <= 0.5:
            raise ValueError("window fraction must be in (0, 0.5]")
        if not self.flatness_tol > 0:
            raise ValueError("flatness_tol must be positive")


DEFAULT_WINDOW = SteadyStateWindow()


def steady_state(series, window: SteadyStateWindow = DEFAULT_WINDOW, scale: float = 0.0) -> float:
    """Mean of the trailing window, guarded by a flatness check.

    The window is rejected when its peak-to-peak spread exceeds
    ``flatness_tol * max(|mean|, scale)``.
    """
    x = np.asarray(series, dtype=float)
    if x.size == 0:
        raise ValueError("empty series")
    n = max(1, int(math.ceil(window.fraction * x.size)))
    tail = x[-n:]
    mean = float(tail.mean())
    spread = float(tail.max() - tail.min())
    if spread > window.flatness_tol * max(abs(mean), scale):
        raise NotSettled(f"not settled: tail spread {spread:.6g} vs mean {mean:.6g}")
    return mean


def overshoot(series, final_value: float) -> float:
    """Percent overshoot of ``series`` above ``final_value``, floored at 0."""
    if final_value == 0:
        raise ValueError("final_value must be non-zero")
    peak = float(np.max(series))
    return max(0.0, 100.0 * (peak - final_value) / abs(final_value))


def _check(run: RunResult) -> None:
    if not run.completed:
        raise NotSettled(f"not settled: run {run.status}")


def power_angle(run: RunResult, window: SteadyStateWindow = DEFAULT_WINDOW) -> float:
    _check(run)
    return steady_state(run.theta_r, window)


def delivery_gain(
    baseline: RunResult, decoupled: RunResult, window: SteadyStateWindow = DEFAULT_WINDOW, scale: float = 0.0
) -> float:
    """Percent change of steady-state grid-side active power."""
    _check(baseline)
    _check(decoupled)
    pb = steady_state(baseline.p_grid, window, scale)
    pd = steady_state(decoupled.p_grid, window, scale)
    if abs(pb) < 1e-9 * max(abs(pd), 1.0):
        raise ValueError("undefined gain: baseline grid power is zero")
    return 100.0 * (pd - pb) / pb


@dataclass(frozen=True)
class ComparisonReport:
    scenario: str
    r_g: float
    l_g: float
    r_over_x: float
    scr: float
    delta_baseline: float = math.nan
    delta_decoupled: float = math.nan
    q_e_ss_baseline: float = math.nan
    q_e_ss_decoupled: float = math.nan
    p_grid_gain_percent: float = math.nan
    p_e_overshoot_baseline: float = math.nan
    p_e_overshoot_decoupled: float = math.nan
    status: str = "settled"

    @property
    def settled(self) -> bool:
        return self.status == "settled"


def compare_runs(
    name: str,
    r_g: float,
    l_g: float,
    rx: float,
    scr: float,
    baseline: RunResult,
    decoupled: RunResult,
    s_rated: float,
    window: SteadyStateWindow = DEFAULT_WINDOW,
) -> ComparisonReport:
    """Build one comparison row; unsettled or aborted runs give a flagged row."""
    head = dict(scenario=name, r_g=r_g, l_g=l_g, r_over_x=rx, scr=scr)
    try:
        qb = steady_state(baseline.q_e, window, s_rated) if baseline.completed else _raise(baseline)
        qd = steady_state(decoupled.q_e, window, s_rated) if decoupled.completed else _raise(decoupled)
        pe_b = steady_state(baseline.p_e, window, s_rated)
        pe_d = steady_state(decoupled.p_e, window, s_rated)
        return ComparisonReport(
            **head,
            delta_baseline=power_angle(baseline, window),
            delta_decoupled=power_angle(decoupled, window),
            q_e_ss_baseline=qb,
            q_e_ss_decoupled=qd,
            p_grid_gain_percent=delivery_gain(baseline, decoupled, window, s_rated),
            p_e_overshoot_baseline=overshoot(baseline.p_e, pe_b),
            p_e_overshoot_decoupled=overshoot(decoupled.p_e, pe_d),
        )
    except ValueError as exc:
        return ComparisonReport(**head, status=str(exc))


def _raise(run: RunResult):
    raise NotSettled(f"not settled: run {run.status}")
