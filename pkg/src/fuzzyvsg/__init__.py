"""Phasor-domain VSG grid-forming inverter simulator with fuzzy adaptive power decoupling."""

from .phasor import GridImpedance, GridStrength, impedance_angle, impedance_magnitude, r_over_x, short_circuit_ratio
from .powerflow import NetworkConfig, PowerFlowResult, power_transfer, small_signal_gains, solve_steady_state
from .vsg import LossOfSynchronism, VsgParams, VsgState, vsg_step
from .fuzzy import FuzzyController, default_controller
from .engine import Event, RunResult, Scenario, run, run_pair

__version__ = "0.1.0"

__all__ = [
    "GridImpedance",
    "GridStrength",
    "impedance_angle",
    "impedance_magnitude",
    "r_over_x",
    "short_circuit_ratio",
    "NetworkConfig",
    "PowerFlowResult",
    "power_transfer",
    "small_signal_gains",
    "solve_steady_state",
    "LossOfSynchronism",
    "VsgParams",
    "VsgState",
    "vsg_step",
    "FuzzyController",
    "default_controller",
    "Event",
    "RunResult",
    "Scenario",
    "run",
    "run_pair",
]
