"""Two-bus power transfer between the VSG source and a stiff grid.

The inverter's internal voltage ``e_r∠theta_r`` sits directly at the PCC
(ideal inner loops) and feeds the infinite bus ``v_g∠0`` through the grid
impedance. An optional resistive local load is connected at the PCC.
All voltages are per-phase RMS; powers are three-phase totals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .phasor import GridImpedance, impedance_angle, impedance_magnitude

HALF_PI = 0.5 * math.pi


@dataclass(frozen=True)
class NetworkConfig:
    v_g: float
    z: GridImpedance
    local_load_w: float = 0.0
    e_0: float = 220.0  # nominal PCC voltage used to size the load conductance

    def __post_init__(self):
        if not self.v_g > 0:
            raise ValueError("v_g must be positive")
        if not self.local_load_w >= 0:
            raise ValueError("local_load_w must be non-negative")
        if not self.e_0 > 0:
            raise ValueError("e_0 must be positive")

    @property
    def g_load(self) -> float:
        """Per-phase load conductance (S), fixed at the nominal voltage."""
        return self.local_load_w / (3.0 * self.e_0 * self.e_0)

    @property
    def z_mag(self) -> float:
        return impedance_magnitude(self.z)

    @property
    def alpha(self) -> float:
        return impedance_angle(self.z)


class PowerFlowResult(NamedTuple):
    p_e: float
    q_e: float
    p_grid: float
    q_grid: float
    p_load: float


class Gains(NamedTuple):
    g1: float  # dP/dtheta (W/rad)
    g2: float  # dP/dE (W/V)
    g3: float  # dQ/dtheta (Var/rad)
    g4: float  # dQ/dE (Var/V)


def power_transfer(e_r: float, theta_r: float, net: NetworkConfig) -> PowerFlowResult:
    if not e_r > 0:
        raise ValueError("e_r must be positive")
    if not abs(theta_r) < HALF_PI:
        raise ValueError("theta_r must lie in (-pi/2, pi/2)")
    z = net.z_mag
    a = net.alpha
    v = net.v_g
    k = 3.0 / z
    ca, sa = math.cos(a), math.sin(a)
    cat, sat = math.cos(a + theta_r), math.sin(a + theta_r)
    p_line = k * (e_r * e_r * ca - v * e_r * cat)
    q_line = k * (e_r * e_r * sa - v * e_r * sat)
    # power arriving at the infinite bus: 3 * V * conj(I)
    cam, sam = math.cos(a - theta_r), math.sin(a - theta_r)
    p_grid = k * (v * e_r * cam - v * v * ca)
    q_grid = k * (v * e_r * sam - v * v * sa)
    p_load = 3.0 * net.g_load * e_r * e_r
    return PowerFlowResult(p_line + p_load, q_line, p_grid, q_grid, p_load)


def line_current(e_r: float, theta_r: float, net: NetworkConfig) -> complex:
    """Per-phase line current phasor from PCC to grid."""
    e = complex(e_r * math.cos(theta_r), e_r * math.sin(theta_r))
    return (e - net.v_g) / net.z.complex


def small_signal_gains(e_r0: float, theta_r0: float, net: NetworkConfig) -> Gains:
    """Linearised P/Q sensitivities around (e_r0, theta_r0), no local load."""
    if net.local_load_w != 0:
        raise ValueError("small-signal gains are defined for the no-load network")
    if not e_r0 > 0 or not abs(theta_r0) < HALF_PI:
        raise ValueError("operating point outside e_r > 0, |theta_r| < pi/2")
    k = 3.0 / net.z_mag
    a = net.alpha
    v = net.v_g
    g1 = k * v * e_r0 * math.sin(a + theta_r0)
    g2 = k * (2.0 * e_r0 * math.cos(a) - v * math.cos(a + theta_r0))
    g3 = -k * v * e_r0 * math.cos(a + theta_r0)
    g4 = k * (2.0 * e_r0 * math.sin(a) - v * math.sin(a + theta_r0))
    return Gains(g1, g2, g3, g4)


def coupling_prediction(g: Gains, d_theta: float, d_e: float) -> tuple[float, float]:
    return g.g1 * d_theta + g.g2 * d_e, g.g3 * d_theta + g.g4 * d_e


def max_transfer(net: NetworkConfig, e_r: float) -> float:
    """Supremum of p_e over the admissible angle range at fixed e_r."""
    return _p_at(net, e_r, HALF_PI)


def _p_at(net: NetworkConfig, e_r: float, theta_r: float) -> float:
    k = 3.0 / net.z_mag
    a = net.alpha
    return k * (e_r * e_r * math.cos(a) - net.v_g * e_r * math.cos(a + theta_r)) + 3.0 * net.g_load * e_r * e_r


def solve_steady_state(net: NetworkConfig, p_target: float, e_r: float, rtol: float = 1e-9) -> float:
    """Power angle at which p_e(e_r, theta) equals ``p_target``, by bisection.

    p_e is strictly increasing in theta on [-alpha, pi/2) because its only
    stationary points are at alpha + theta = 0 and pi. The search uses that
    branch; when p_e(e_r, 0) <= p_target the root is the smallest theta >= 0.
    """
    if not e_r > 0:
        raise ValueError("e_r must be positive")
    lo = -net.alpha
    hi = HALF_PI
    if lo <= -HALF_PI:
        lo = -HALF_PI
    p_lo = _p_at(net, e_r, lo)
    p_hi = _p_at(net, e_r, hi)
    if p_target >= p_hi:
        raise ValueError(f"power target infeasible: {p_target:.6g} W >= transfer maximum {p_hi:.6g} W")
    if p_target < p_lo:
        raise ValueError(f"power target infeasible: {p_target:.6g} W below transfer minimum {p_lo:.6g} W")
    tol = rtol * max(abs(p_target), 1.0)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        p_mid = _p_at(net, e_r, mid)
        if abs(p_mid - p_target) <= tol * 1e-3 or hi - lo < 1e-16:
            return mid
        if p_mid < p_target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
