"""Command-line entry point: simulate, compare, sweep."""

from __future__ import annotations

import argparse
import contextlib
import logging
import sys

import numpy as np

from . import config
from .engine import COLUMNS, RunResult, run, run_many
from .metrics import ComparisonReport, compare_runs
from .phasor import r_over_x, short_circuit_ratio

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_ABORTED = 2
EXIT_UNSETTLED = 3

COMPARE_COLUMNS = (
    "scenario", "r_g", "l_g", "r_over_x", "delta_base_rad", "delta_dec_rad",
    "q_e_ss_base", "q_e_ss_dec", "p_gain_percent", "scr", "status",
)

log = logging.getLogger("fuzzyvsg")


def _num(x: float) -> str:
    return repr(float(x))


def write_trajectory(result: RunResult, out) -> None:
    out.write(",".join(COLUMNS) + "\n")
    cols = [result.columns[c] for c in COLUMNS]
    for i in range(len(result)):
        out.write(",".join(_num(c[i]) for c in cols) + "\n")
    if not result.completed:
        out.write(f"# status: {result.status} at t={result.abort_time!r}\n")


def write_comparison(rows: list[ComparisonReport], out) -> None:
    out.write(",".join(COMPARE_COLUMNS) + "\n")
    for r in rows:
        vals = [
            r.scenario, _num(r.r_g), _num(r.l_g), _num(r.r_over_x),
            _num(r.delta_baseline), _num(r.delta_decoupled),
            _num(r.q_e_ss_baseline), _num(r.q_e_ss_decoupled),
            _num(r.p_grid_gain_percent), _num(r.scr), r.status.replace(",", ";"),
        ]
        out.write(",".join(vals) + "\n")


def _apply_overrides(sf: config.ScenarioFile, args) -> config.ScenarioFile:
    sim_update = {}
    if getattr(args, "dt", None) is not None:
        sim_update["dt_s"] = args.dt
    if getattr(args, "duration", None) is not None:
        sim_update["duration_s"] = args.duration
    if sim_update:
        sf = sf.model_copy(update={"sim": sf.sim.model_copy(update=sim_update)})
    dec = getattr(args, "decoupler", None)
    if dec in ("on", "off"):
        sf = sf.model_copy(update={"decoupler": sf.decoupler.model_copy(update={"enabled": dec == "on"})})
    # re-validate after model_copy, which skips validation
    return config.ScenarioFile.model_validate(sf.model_dump())


def _open_out(path: str):
    if path == "-":
        return contextlib.nullcontext(sys.stdout)
    return open(path, "w", newline="")


def compare_points(points: list[tuple[str, config.ScenarioFile]], jobs: int = 1) -> list[ComparisonReport]:
    scenarios = [config.to_scenario(sf, name) for name, sf in points]
    pairs = run_many(scenarios, jobs=jobs, pair=True)
    rows = []
    for (name, sf), sc, (base, dec) in zip(points, scenarios, pairs):
        g = sf.grid
        rx = r_over_x(sc.network.z) if g.l_g_henry > 0 else float("inf")
        scr = short_circuit_ratio(sc.network.z, g.v_g_phase_rms_v, sf.vsg.s_rated_va).scr
        rows.append(compare_runs(name, g.r_g_ohm, g.l_g_henry, rx, scr, base, dec, sf.vsg.s_rated_va))
    return rows


def cmd_simulate(args) -> int:
    sf = _apply_overrides(config.load_scenario_file(args.scenario), args)
    result = run(config.to_scenario(sf))
    with _open_out(args.output) as out:
        write_trajectory(result, out)
    if not result.completed:
        log.error("%s: %s", sf.name, result.status)
        return EXIT_ABORTED
    return EXIT_OK


def _finish_comparison(rows: list[ComparisonReport], output: str) -> int:
    with _open_out(output) as out:
        write_comparison(rows, out)
    bad = [r for r in rows if not r.settled]
    for r in bad:
        log.error("%s: %s", r.scenario, r.status)
    return EXIT_UNSETTLED if bad else EXIT_OK


def cmd_compare(args) -> int:
    sf = _apply_overrides(config.load_scenario_file(args.scenario), args)
    rows = compare_points(config.sweep_points(sf), jobs=args.jobs)
    return _finish_comparison(rows, args.output)


def cmd_sweep(args) -> int:
    sf = _apply_overrides(config.load_scenario_file(args.scenario), args)
    if sf.sweep is not None:
        sf = sf.model_copy(update={"sweep": None})
    if args.steps < 1:
        raise config.ConfigError("--steps must be >= 1")
    lo, hi = args.range
    values = np.linspace(lo, hi, args.steps) if args.steps > 1 else np.array([lo])
    points = []
    for v in sorted(values):
        points.append((f"{args.param}={v:.6g}", config.set_leaf(sf, args.param, float(v))))
    rows = compare_points(points, jobs=args.jobs)
    return _finish_comparison(rows, args.output)


def cmd_scenarios(args) -> int:
    for name in config.bundled_names():
        sf = config.load_scenario_file(name)
        print(f"{name:18s} {sf.description}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fuzzyvsg", description=__doc__)
    p.add_argument("--dump-defaults", action="store_true", help="print the default scenario file and exit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command")

    def common(sp):
        sp.add_argument("scenario", help="scenario file path or bundled scenario name")
        sp.add_argument("-o", "--output", default="-", help="output CSV path ('-' for stdout)")
        sp.add_argument("--dt", type=float, help="override sim.dt_s")
        sp.add_argument("--duration", type=float, help="override sim.duration_s")

    s = sub.add_parser("simulate", help="run one scenario and write the trajectory CSV")
    common(s)
    s.add_argument("--decoupler", choices=("on", "off", "file"), default="file")
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("compare", help="baseline vs decoupled comparison table")
    common(c)
    c.add_argument("-j", "--jobs", type=int, default=1)
    c.set_defaults(func=cmd_compare)

    w = sub.add_parser("sweep", help="comparison rows over a range of one numeric key")
    common(w)
    w.add_argument("--param", required=True, help="dotted numeric key, e.g. grid.l_g_henry")
    w.add_argument("--range", nargs=2, type=float, required=True, metavar=("LO", "HI"))
    w.add_argument("--steps", type=int, default=5)
    w.add_argument("-j", "--jobs", type=int, default=1)
    w.set_defaults(func=cmd_sweep)

    ls = sub.add_parser("scenarios", help="list bundled scenarios")
    ls.set_defaults(func=cmd_scenarios)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    if args.dump_defaults:
        sys.stdout.write(config.dump_defaults())
        return EXIT_OK
    if not args.command:
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except (config.ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
