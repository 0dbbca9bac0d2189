"""Fixed-step closed-loop simulation of the VSG against the stiff grid."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np
from scipy.optimize import brentq

from .fuzzy import FuzzyController, adapt
from .phasor import GridImpedance, r_over_x
from .powerflow import NetworkConfig, PowerFlowResult, power_transfer, solve_steady_state
from .vsg import (
    LossOfSynchronism,
    VsgParams,
    VsgState,
    check_filter,
    cold_state,
    droop_clamped,
    reactive_droop,
    vsg_step,
)

logger = logging.getLogger(__name__)

COLUMNS = ("t", "p_e", "q_e", "p_grid", "q_grid", "omega", "e_r", "theta_r", "j", "d", "k_q")
EVENT_KINDS = ("set_p_m", "set_local_load", "set_grid_impedance")
INIT_MODES = ("cold", "steady_state")


@dataclass(frozen=True)
class Event:
    t: float
    kind: str
    value: float = 0.0  # W for set_p_m / set_local_load
    r_g: float | None = None
    l_g: float | None = None

    def __post_init__(self):
        if not self.t >= 0:
            raise ValueError("event time must be >= 0")
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {self.kind!r}")
        if self.kind == "set_grid_impedance" and (self.r_g is None or self.l_g is None):
            raise ValueError("set_grid_impedance needs r_g and l_g")
        if self.kind == "set_local_load" and self.value < 0:
            raise ValueError("local load must be non-negative")


@dataclass(frozen=True)
class Scenario:
    network: NetworkConfig
    vsg: VsgParams = field(default_factory=VsgParams)
    decoupler: FuzzyController = field(default_factory=lambda: FuzzyController(enabled=False))
    dt: float = 1e-4
    duration: float = 10.0
    events: tuple[Event, ...] = ()
    record_stride: int = 100
    s_rated: float = 20000.0
    init: str = "cold"
    name: str = "scenario"

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.duration >= 0:
            raise ValueError("duration must be non-negative")
        if not (isinstance(self.record_stride, int) and self.record_stride >= 1):
            raise ValueError("record_stride must be an integer >= 1")
        if not self.s_rated > 0:
            raise ValueError("s_rated must be positive")
        if self.init not in INIT_MODES:
            raise ValueError(f"init must be one of {INIT_MODES}")
        check_filter(self.dt, self.vsg.filter_cutoff)
        # stable sort: simultaneous events keep their listed order
        object.__setattr__(self, "events", tuple(sorted(self.events, key=lambda e: e.t)))

    @property
    def n_steps(self) -> int:
        return int(math.floor(self.duration / self.dt + 1e-9))

    def with_decoupler(self, enabled: bool) -> "Scenario":
        return replace(self, decoupler=replace(self.decoupler, enabled=enabled))


@dataclass
class RunResult:
    columns: dict[str, np.ndarray]
    status: str = "completed"
    abort_time: float | None = None
    name: str = ""

    def __getattr__(self, item):
        cols = self.__dict__.get("columns", {})
        if item in cols:
            return cols[item]
        raise AttributeError(item)

    @property
    def completed(self) -> bool:
        return self.status == "completed"

    def __len__(self) -> int:
        return len(self.columns["t"])


def _event_step(ev: Event, dt: float) -> int:
    return max(0, int(math.ceil(ev.t / dt - 1e-9)))


class Simulation:
    """Mutable driver around the pure per-step functions.

    One call to ``step`` applies due events, evaluates the power flow at the
    current state, advances the VSG loops, then adapts (J, D, k_q) for the
    next step when the decoupler is enabled.
    """

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.k = 0
        self.network = scenario.network
        self.baseline = scenario.vsg
        self._ev_steps = [_event_step(e, scenario.dt) for e in scenario.events]
        self._ev_idx = 0
        self._clamped = False
        if scenario.decoupler.enabled:
            r_over_x(self.network.z)  # fuzzy input must be defined
        if scenario.init == "steady_state":
            self.state, self.params = steady_state_init(scenario)
        else:
            self.state = cold_state(scenario.vsg)
            self.params = self._adapted(scenario.vsg, self.state.q_f, lag=False)

    @property
    def t(self) -> float:
        return self.k * self.scenario.dt

    def _adapted(self, prm: VsgParams, q_f: float, lag: bool = True) -> VsgParams:
        ctrl = self.scenario.decoupler
        if not ctrl.enabled:
            return prm
        base = (self.baseline.j, self.baseline.d, self.baseline.k_q)
        j, d, kq = adapt(ctrl, q_f, self.scenario.s_rated, r_over_x(self.network.z), prm.e_0, base)
        if lag and ctrl.output_lag_s > 0:
            a = min(1.0, self.scenario.dt / ctrl.output_lag_s)
            j = prm.j + a * (j - prm.j)
            d = prm.d + a * (d - prm.d)
            kq = prm.k_q + a * (kq - prm.k_q)
        return replace(prm, j=j, d=d, k_q=kq)

    def apply_due_events(self) -> None:
        events = self.scenario.events
        while self._ev_idx < len(events) and self._ev_steps[self._ev_idx] <= self.k:
            self.apply_event(events[self._ev_idx])
            self._ev_idx += 1

    def apply_event(self, ev: Event) -> None:
        if ev.kind == "set_p_m":
            self.params = replace(self.params, p_m=ev.value)
            self.baseline = replace(self.baseline, p_m=ev.value)
        elif ev.kind == "set_local_load":
            self.network = replace(self.network, local_load_w=ev.value)
        else:
            z = GridImpedance(ev.r_g, ev.l_g, self.network.z.omega_0)
            self.network = replace(self.network, z=z)
            if self.scenario.decoupler.enabled:
                # new R/X is seen by the controller on this same step
                self.params = self._adapted(self.params, self.state.q_f, lag=False)

    def flows(self) -> PowerFlowResult:
        return power_transfer(self.state.e_r, self.state.theta_r, self.network)

    def advance(self, pf: PowerFlowResult) -> None:
        self.state = vsg_step(self.state, self.params, pf.p_e, pf.q_e, self.scenario.dt, warn=False)
        clamped = droop_clamped(self.params, self.state.e_r)
        if clamped and not self._clamped:
            # one warning per clamp episode rather than per step
            logger.warning("%s: droop output clamped to %.6g V at t=%.6g s", self.scenario.name, self.state.e_r, self.t)
        self._clamped = clamped
        self.params = self._adapted(self.params, self.state.q_f)
        self.k += 1

    def step(self) -> PowerFlowResult:
        self.apply_due_events()
        pf = self.flows()
        self.advance(pf)
        return pf


def steady_state_init(scenario: Scenario) -> tuple[VsgState, VsgParams]:
    """Equilibrium of the swing, droop and (optional) fuzzy loops at t = 0.

    Events due at t = 0 are applied first so the equilibrium matches the
    initial operating point.
    """
    net = scenario.network
    prm = scenario.vsg
    for ev in scenario.events:
        if _event_step(ev, scenario.dt) == 0:
            if ev.kind == "set_p_m":
                prm = replace(prm, p_m=ev.value)
            elif ev.kind == "set_local_load":
                net = replace(net, local_load_w=ev.value)
            else:
                net = replace(net, z=GridImpedance(ev.r_g, ev.l_g, net.z.omega_0))
    ctrl = scenario.decoupler
    base = (prm.j, prm.d, prm.k_q)
    rx = r_over_x(net.z) if ctrl.enabled else 0.0

    def params_for(q: float) -> VsgParams:
        if not ctrl.enabled:
            return prm
        j, d, kq = adapt(ctrl, q, scenario.s_rated, rx, prm.e_0, base)
        return replace(prm, j=j, d=d, k_q=kq)

    def residual(e: float) -> float:
        theta = solve_steady_state(net, prm.p_m, e)
        q = power_transfer(e, theta, net).q_e
        return e - reactive_droop(params_for(q), q, warn=False)

    grid = np.linspace(0.5 * prm.e_0, 1.5 * prm.e_0, 401)
    prev = None
    for e in grid:
        try:
            r = residual(e)
        except ValueError:
            prev = None
            continue
        if prev is not None and prev[1] * r <= 0:
            e_ss = brentq(residual, prev[0], e, xtol=1e-13, rtol=4 * np.finfo(float).eps)
            theta = solve_steady_state(net, prm.p_m, e_ss)
            pf = power_transfer(e_ss, theta, net)
            params = params_for(pf.q_e)
            state = VsgState(prm.omega_g, theta, e_ss, pf.p_e, pf.q_e)
            return state, params
        prev = (e, r)
    raise ValueError("no steady-state operating point found for the initial conditions")


def run(scenario: Scenario) -> RunResult:
    """Simulate ``scenario`` and record every ``record_stride``-th step."""
    n = scenario.n_steps
    stride = scenario.record_stride
    n_rec = n // stride + 1
    data = np.empty((n_rec, len(COLUMNS)))
    sim = Simulation(scenario)
    status = "completed"
    abort_time = None
    rec = 0
    for k in range(n + 1):
        sim.apply_due_events()
        pf = sim.flows()
        if k % stride == 0:
            st, prm = sim.state, sim.params
            data[rec] = (
                k * scenario.dt, pf.p_e, pf.q_e, pf.p_grid, pf.q_grid,
                st.omega, st.e_r, st.theta_r, prm.j, prm.d, prm.k_q,
            )
            rec += 1
        if k == n:
            break
        try:
            sim.advance(pf)
        except LossOfSynchronism as exc:
            status = f"aborted:{exc}"
            abort_time = (k + 1) * scenario.dt
            break
    data = data[:rec]
    return RunResult({c: data[:, i].copy() for i, c in enumerate(COLUMNS)}, status, abort_time, scenario.name)


def run_pair(scenario: Scenario) -> tuple[RunResult, RunResult]:
    """Same scenario with the decoupler off, then on."""
    return run(scenario.with_decoupler(False)), run(scenario.with_decoupler(True))


def run_many(scenarios: Iterable[Scenario], jobs: int = 1, pair: bool = False) -> list:
    """Run independent scenarios, optionally in worker processes; results keep input order."""
    scenarios = list(scenarios)
    fn = run_pair if pair else run
    if jobs <= 1 or len(scenarios) <= 1:
        return [fn(s) for s in scenarios]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, scenarios))
