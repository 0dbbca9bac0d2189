"""Grid impedance derivations and grid-strength classification."""

from __future__ import annotations

import math
from dataclasses import dataclass

WEAK_SCR_LOW = 2.0
WEAK_SCR_HIGH = 3.0


@dataclass(frozen=True)
class GridImpedance:
    """Series R-L grid impedance seen from the point of common coupling.

    r_g in ohm, l_g in henry, omega_0 in rad/s.
    """

    r_g: float
    l_g: float
    omega_0: float = 314.0

    def __post_init__(self):
        for name in ("r_g", "l_g", "omega_0"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.r_g < 0 or self.l_g < 0:
            raise ValueError("grid resistance and inductance must be non-negative")
        if self.r_g == 0 and self.l_g == 0:
            raise ValueError("degenerate grid impedance: r_g and l_g are both zero")
        if self.omega_0 <= 0:
            raise ValueError("omega_0 must be positive")

    @property
    def x_g(self) -> float:
        return self.omega_0 * self.l_g

    @property
    def complex(self) -> complex:
        return complex(self.r_g, self.x_g)


@dataclass(frozen=True)
class GridStrength:
    scr: float
    grid_class: str  # "very-weak" | "weak" | "strong"


def impedance_magnitude(z: GridImpedance) -> float:
    return math.hypot(z.r_g, z.x_g)


def impedance_angle(z: GridImpedance) -> float:
    """Impedance angle in [0, pi/2]; pi/2 for a purely inductive grid."""
    return math.atan2(z.x_g, z.r_g)


def r_over_x(z: GridImpedance) -> float:
    if z.l_g == 0:
        raise ValueError("undefined ratio: grid reactance is zero")
    return z.r_g / z.x_g


def classify_scr(scr: float) -> str:
    if scr > WEAK_SCR_HIGH:
        return "strong"
    if scr <= WEAK_SCR_LOW:
        return "very-weak"
    # 2 < scr <= 3; scr == 3 exactly is not strong, so it stays weak
    return "weak"


def short_circuit_ratio(z: GridImpedance | float, v_g: float, p_rated: float) -> GridStrength:
    """SCR = V_g^2 / (Z * P_rated) with V_g the per-phase RMS grid voltage.

    ``z`` may be a GridImpedance or an impedance magnitude in ohm.
    """
    if v_g <= 0 or p_rated <= 0:
        raise ValueError("v_g and p_rated must be positive")
    mag = impedance_magnitude(z) if isinstance(z, GridImpedance) else float(z)
    if mag <= 0:
        raise ValueError("impedance magnitude must be positive")
    scr = v_g * v_g / (mag * p_rated)
    return GridStrength(scr=scr, grid_class=classify_scr(scr))
