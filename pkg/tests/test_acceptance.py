"""Acceptance criteria 1-13, each at its stated tolerance.

Every test records one PASS/FAIL line (shown in the terminal summary) and
fails when its criterion is not met.
"""

import math
import time
from dataclasses import replace

import numpy as np
import pytest

from fuzzyvsg import config
from fuzzyvsg.engine import Event, Scenario, Simulation, run, run_pair
from fuzzyvsg.fuzzy import CELLS, FuzzyController, OutputScale, crisp_outputs, default_scales
from fuzzyvsg.metrics import SteadyStateWindow, delivery_gain, overshoot, power_angle, steady_state
from fuzzyvsg.phasor import GridImpedance, classify_scr, short_circuit_ratio
from fuzzyvsg.powerflow import NetworkConfig, power_transfer, small_signal_gains
from fuzzyvsg.vsg import VsgParams

S_RATED = 20000.0
TABLE_ROWS = ("rx1_low_z", "rx1_high_z", "rx2.5_low_z", "rx2.5_high_z")
REFERENCE_DELTA = dict(zip(TABLE_ROWS, (0.12, 0.28, 0.05, 0.17)))


def phasor_flows(e, th, v, r, l):
    z = complex(r, 314.0 * l)
    es = e * complex(math.cos(th), math.sin(th))
    s = 3 * es * ((es - v) / z).conjugate()
    return s.real, s.imag


def test_criterion_01_power_flow_oracle(verdict):
    rng = np.random.default_rng(2024)
    pts = np.column_stack([
        rng.uniform(100, 300, 10000), rng.uniform(-0.5, 0.5, 10000),
        rng.uniform(0, 3, 10000), rng.uniform(0.5e-3, 25e-3, 10000),
    ])
    t0 = time.perf_counter()
    worst = 0.0
    for e, th, r, l in pts:
        pf = power_transfer(e, th, NetworkConfig(220.0, GridImpedance(r, l)))
        p, q = phasor_flows(e, th, 220.0, r, l)
        scale = math.hypot(p, q)
        worst = max(worst, abs(pf.p_e - p) / scale, abs(pf.q_e - q) / scale)
    elapsed = time.perf_counter() - t0
    verdict(1, worst <= 1e-9 and elapsed < 1.0, f"max rel err {worst:.2e} (<= 1e-9), {elapsed:.2f} s (< 1 s)")


def test_criterion_02_gradient_check(verdict):
    rng = np.random.default_rng(99)
    h = 1e-6
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        net = NetworkConfig(220.0, GridImpedance(rng.uniform(0, 3), rng.uniform(0.5e-3, 25e-3)))
        e, th = rng.uniform(100, 300), rng.uniform(-0.5, 0.5)
        g = small_signal_gains(e, th, net)
        pt, mt = power_transfer(e, th + h, net), power_transfer(e, th - h, net)
        pe, me = power_transfer(e + h, th, net), power_transfer(e - h, th, net)
        fd = ((pt.p_e - mt.p_e) / (2 * h), (pe.p_e - me.p_e) / (2 * h),
              (pt.q_e - mt.q_e) / (2 * h), (pe.q_e - me.q_e) / (2 * h))
        # relative to each gain's natural scale, so near-zero gains do not divide by ~0
        k = 3 / net.z_mag
        scales = (k * 220 * e, k * e, k * 220 * e, k * e)
        for a, b, s in zip(g, fd, scales):
            worst = max(worst, abs(a - b) / max(abs(a), s))
    elapsed = time.perf_counter() - t0
    verdict(2, worst <= 1e-6 and elapsed < 1.0, f"max rel err {worst:.2e} (<= 1e-6), {elapsed:.2f} s (< 1 s)")


def test_criterion_03_scr_endpoints(verdict):
    hi = short_circuit_ratio(0.85, 220.0, S_RATED).scr
    lo = short_circuit_ratio(2.6, 220.0, S_RATED).scr
    literal = round(hi, 2) == 2.85 and round(lo, 2) == 0.93
    err_hi, err_lo = abs(hi - 2.87) / 2.87, abs(lo - 0.96) / 0.96
    eps = 1e-12
    bounds = (
        classify_scr(2.0) == "very-weak" and classify_scr(2.0 + eps) == "weak"
        and classify_scr(3.0) == "weak" and classify_scr(3.0 + eps) == "strong"
    )
    ok = literal and err_hi <= 0.02 and err_lo <= 0.02 and bounds
    verdict(3, ok, f"SCR {hi:.4f} vs 2.87 ({100 * err_hi:.2f}%), {lo:.4f} vs 0.96 ({100 * err_lo:.2f}%), "
                   f"tolerance 2%; boundaries exact: {bounds}")


def test_criterion_04_nominal_convergence(verdict):
    sc = Scenario(NetworkConfig(220.0, GridImpedance(1.25, 4e-3)), VsgParams(), duration=10.0)
    sim = Simulation(sc)
    for _ in range(sc.n_steps):
        sim.step()
    s, prm = sim.state, sim.params
    droop_err = abs((s.e_r - prm.e_0) - prm.k_q * (prm.q_m - s.q_f)) / prm.e_0
    ok = abs(s.p_f - 20000.0) <= 200.0 and abs(s.omega - 314.0) <= 1e-3 and droop_err <= 1e-6
    verdict(4, ok, f"p_f={s.p_f:.2f} W, omega={s.omega:.6f} rad/s, droop residual {droop_err:.1e} e_0")


def bundled(name):
    return config.to_scenario(config.load_scenario_file(name))


def test_criterion_05_coupling_baseline(verdict):
    r = run(bundled("va_baseline"))
    q = steady_state(r.q_e, scale=S_RATED)
    verdict(5, abs(q) >= 0.05 * S_RATED, f"steady-state q_e={q:.1f} Var (|q_e| >= 1000 Var)")


@pytest.fixture(scope="module")
def table_runs():
    sf = config.load_scenario_file("table5_sweep")
    out = {}
    for name, point in config.sweep_points(sf):
        out[name] = run_pair(config.to_scenario(point, name))
    return out


def q_ss(r):
    return steady_state(r.q_e, scale=S_RATED)


def test_criterion_06_static_decoupling(verdict, table_runs):
    red = {n: 1 - abs(q_ss(d)) / abs(q_ss(b)) for n, (b, d) in table_runs.items()}
    detail = ", ".join(f"{n}: {100 * v:.1f}%" for n, v in red.items())
    verdict(6, all(v >= 0.6 for v in red.values()), f"|q_e| reduction {detail} (>= 60%)")


def test_criterion_07_power_angle(verdict, table_runs):
    parts, ok = [], True
    for n, (b, d) in table_runs.items():
        db, dd = power_angle(b), power_angle(d)
        ratio = dd / db
        within = abs(db - REFERENCE_DELTA[n]) <= 0.5 * REFERENCE_DELTA[n]
        ok &= dd < db and ratio <= 0.75 and within
        parts.append(f"{n}: base {db:.4f} (ref {REFERENCE_DELTA[n]}) dec {dd:.4f} ratio {ratio:.3f}")
    verdict(7, ok, "; ".join(parts) + " (ratio <= 0.75, base within 50%)")


def test_criterion_08_delivery_gain(verdict, table_runs):
    gains = {n: delivery_gain(b, d, scale=S_RATED) for n, (b, d) in table_runs.items()}
    ok = all(g > 0 for g in gains.values()) and gains["rx2.5_high_z"] > gains["rx1_low_z"]
    verdict(8, ok, ", ".join(f"{n}: {g:+.2f}%" for n, g in gains.items()))


def test_criterion_09_dynamic_decoupling(verdict):
    net = NetworkConfig(220.0, GridImpedance(1.75, 2.2e-3))  # R/X = 2.5
    kq_only = FuzzyController(scales={
        "j": OutputScale({"S": 50.0, "M": 50.0, "L": 50.0}, 50.0, 50.0),
        "d": OutputScale({"M": 90000.0, "L": 90000.0, "VL": 90000.0}, 90000.0, 90000.0),
        "k_q": default_scales()["k_q"],
    })
    over = {}
    for label, ctrl in (("adaptive", FuzzyController()), ("k_q-only", kq_only)):
        sc = Scenario(net, VsgParams(p_m=10000.0), decoupler=ctrl, duration=8.0, init="steady_state",
                      events=(Event(1.0, "set_p_m", 20000.0),), record_stride=10)
        r = run(sc)
        assert r.completed
        over[label] = overshoot(r.p_e[r.t >= 1.0], 20000.0)
    verdict(9, over["adaptive"] <= over["k_q-only"],
            f"p_e overshoot adaptive J/D {over['adaptive']:.2f}% vs k_q-only {over['k_q-only']:.2f}%")


def load_step_metrics(name):
    # start settled so the pre-load window is a true steady state, not the tail of start-up
    base, dec = run_pair(replace(bundled(name), init="steady_state"))
    pre = dec.t < 5.0
    p_before = steady_state(dec.p_grid[pre], SteadyStateWindow(0.1), S_RATED)
    p_after = steady_state(dec.p_grid, scale=S_RATED)
    bound = 0.4 * abs(q_ss(base))
    return p_before - p_after, abs(q_ss(dec)), bound


def test_criterion_10_load_step(verdict):
    parts, ok = [], True
    for name in ("load_step", "load_step_case2"):
        drop, q, bound = load_step_metrics(name)
        ok &= abs(drop - 5000.0) <= 250.0 and q <= bound
        parts.append(f"{name}: p_grid drop {drop:.0f} W ({100 * (drop - 5000) / 5000:+.1f}%), "
                     f"|q_e| {q:.0f} <= {bound:.0f} Var")
    verdict(10, ok, "; ".join(parts) + " (drop 5 kW +-5%)")


def settle_errors(scenario):
    sim = Simulation(scenario)
    errs, aborted = [], None
    targets = [(3.0, 10000.0), (6.0, 20000.0), (9.0, 10000.0)]
    try:
        for t_end, target in targets:
            while sim.t < t_end - 1e-9:
                sim.step()
            errs.append(abs(sim.state.p_f - target) / target)
    except RuntimeError as exc:
        aborted = str(exc)
    return errs, aborted


def test_criterion_11_reference_step(verdict):
    sc = bundled("ref_step")
    errs, aborted = settle_errors(sc)
    base_errs, _ = settle_errors(sc.with_decoupler(False))
    ok = aborted is None and len(errs) == 3 and max(errs) <= 0.01
    fmt = lambda es: "/".join(f"{100 * e:.2f}%" for e in es)  # noqa: E731
    verdict(11, ok, f"decoupled p_f error before each event {fmt(errs)} (<= 1%); "
                    f"baseline {fmt(base_errs)}; abort: {aborted}")


def test_criterion_12_fuzzy_properties(verdict):
    ctrl = FuzzyController()
    rng = np.random.default_rng(12)
    lo = [ctrl.scales[n] for n in ("j", "d", "k_q")]
    contained = all(
        all(s.lo <= v <= s.hi for s, v in zip(lo, crisp_outputs(ctrl, q, rx)))
        for q, rx in zip(rng.uniform(-2, 1, 10000), rng.uniform(0, 5, 10000))
    )
    monotone = True
    rxs = np.linspace(0.8, 2.7, 50)
    for q in np.linspace(-1, 0.2, 50):
        out = np.array([crisp_outputs(ctrl, q, rx) for rx in rxs])
        monotone &= bool(np.all(np.diff(out[:, 0]) <= 0) and np.all(np.diff(out[:, 1]) >= 0)
                         and np.all(np.diff(out[:, 2]) >= 0))
    tables = {  # rows M, H; columns VN, N, Z
        "j": ("S", "M", "L", "S", "S", "M"),
        "d": ("VL", "L", "M", "VL", "VL", "L"),
        "k_q": ("L", "M", "S", "L", "L", "M"),
    }
    verbatim = all(tuple(ctrl.tables[n].lookup(*c) for c in CELLS) == t for n, t in tables.items())
    verdict(12, contained and monotone and verbatim,
            f"range containment {contained}, row monotonicity {monotone}, tables verbatim {verbatim}")


def test_criterion_13_determinism_and_convergence(verdict):
    net = NetworkConfig(220.0, GridImpedance(1.25, 4e-3))
    runs = {dt: run(Scenario(net, dt=dt, record_stride=stride, duration=10.0))
            for dt, stride in ((4e-4, 10), (2e-4, 20), (1e-4, 40))}
    again = run(Scenario(net, dt=1e-4, record_stride=40, duration=10.0))
    identical = all(np.array_equal(again.columns[c], runs[1e-4].columns[c]) for c in again.columns)
    a, b, c = (runs[dt].theta_r for dt in (4e-4, 2e-4, 1e-4))
    ratio = float(np.max(np.abs(a - b)) / np.max(np.abs(b - c)))
    verdict(13, identical and abs(ratio - 2) <= 0.3,
            f"bit-identical {identical}, Richardson ratio {ratio:.4f} (2 +- 0.3)")
