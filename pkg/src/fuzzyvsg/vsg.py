"""VSG outer power loops: measurement filter, swing equation, reactive droop.

Each function maps a state to a new state for one forward-Euler step of
length ``dt``. The angle ``theta_r`` is measured against the stiff-grid
phasor, which rotates at ``omega_g``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

logger = logging.getLogger(__name__)

HALF_PI = 0.5 * math.pi
DROOP_CLAMP = 0.5  # e_r is held within (1 +/- DROOP_CLAMP) * e_0


class LossOfSynchronism(RuntimeError):
    """Power angle left (-pi/2, pi/2)."""

    def __init__(self, theta_r: float):
        super().__init__(f"loss of synchronism: theta_r={theta_r:.6g} rad outside (-pi/2, pi/2)")
        self.theta_r = theta_r


@dataclass(frozen=True, slots=True)
class VsgParams:
    j: float = 50.0
    d: float = 90000.0
    k_q: float = 0.005
    p_m: float = 20000.0
    q_m: float = 0.0
    e_0: float = 220.0
    omega_0: float = 314.0
    omega_g: float = 314.0
    filter_cutoff: float = 31.4

    def __post_init__(self):
        if not self.j > 0:
            raise ValueError("j must be positive")
        if not self.d >= 0:
            raise ValueError("d must be non-negative")
        if not self.k_q >= 0:
            raise ValueError("k_q must be non-negative")
        for name in ("e_0", "omega_0", "omega_g", "filter_cutoff"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


class VsgState(NamedTuple):
    omega: float
    theta_r: float
    e_r: float
    p_f: float
    q_f: float


def cold_state(prm: VsgParams) -> VsgState:
    return VsgState(prm.omega_g, 0.0, prm.e_0, 0.0, 0.0)


def check_filter(dt: float, cutoff: float) -> None:
    if not dt > 0:
        raise ValueError("dt must be positive")
    if cutoff * dt >= 1.0:
        raise ValueError(f"filter unstable at this step size (cutoff*dt = {cutoff * dt:.4g} >= 1)")


def filter_step(state: VsgState, p_raw: float, q_raw: float, dt: float, cutoff: float) -> VsgState:
    check_filter(dt, cutoff)
    a = dt * cutoff
    return state._replace(p_f=state.p_f + a * (p_raw - state.p_f), q_f=state.q_f + a * (q_raw - state.q_f))


def swing_step(state: VsgState, prm: VsgParams, dt: float) -> VsgState:
    """Advance omega with the swing equation, then theta_r with the new omega."""
    domega = (prm.p_m - state.p_f - prm.d * (state.omega - prm.omega_g)) / (prm.j * prm.omega_0)
    omega = state.omega + dt * domega
    theta = state.theta_r + dt * (omega - prm.omega_g)
    if not abs(theta) < HALF_PI:
        raise LossOfSynchronism(theta)
    return state._replace(omega=omega, theta_r=theta)


def droop_clamped(prm: VsgParams, e_r: float) -> bool:
    return not (1.0 - DROOP_CLAMP) * prm.e_0 < e_r < (1.0 + DROOP_CLAMP) * prm.e_0


def reactive_droop(prm: VsgParams, q_f: float, warn: bool = True) -> float:
    e = prm.e_0 + prm.k_q * (prm.q_m - q_f)
    lo = (1.0 - DROOP_CLAMP) * prm.e_0
    hi = (1.0 + DROOP_CLAMP) * prm.e_0
    if e < lo or e > hi:
        clamped = min(max(e, lo), hi)
        if warn:
            logger.warning("droop output %.6g V clamped to %.6g V", e, clamped)
        return clamped
    return e


def vsg_step(
    state: VsgState, prm: VsgParams, p_raw: float, q_raw: float, dt: float, warn: bool = True
) -> VsgState:
    """Filter, swing, droop, in that order."""
    state = filter_step(state, p_raw, q_raw, dt, prm.filter_cutoff)
    state = swing_step(state, prm, dt)
    return state._replace(e_r=reactive_droop(prm, state.q_f, warn))
