"""Scenario file schema (YAML) and conversion to engine objects.

Every field carries its unit in the name. Unknown keys are rejected; every
omitted field takes the nominal-system default.
"""

from __future__ import annotations

import copy
from importlib import resources
from pathlib import Path
from typing import Annotated, Any, Literal, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, ValidationError, field_validator

from . import fuzzy
from .engine import Event, Scenario
from .phasor import GridImpedance
from .powerflow import NetworkConfig
from .vsg import VsgParams


class ConfigError(ValueError):
    """Malformed or invalid scenario file."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridSection(_Strict):
    v_g_phase_rms_v: PositiveFloat = 220.0
    r_g_ohm: float = Field(1.25, ge=0)
    l_g_henry: float = Field(4e-3, ge=0)
    omega_rad_s: PositiveFloat = 314.0
    local_load_w: float = Field(0.0, ge=0)


class VsgSection(_Strict):
    j: PositiveFloat = 50.0
    d: float = Field(90000.0, ge=0)
    k_q: float = Field(0.005, ge=0)
    p_m_w: float = 20000.0
    q_m_var: float = 0.0
    e_0_v: PositiveFloat = 220.0
    filter_cutoff_rad_s: PositiveFloat = 31.4
    s_rated_va: PositiveFloat = 20000.0


class MfSpec(_Strict):
    center: float
    sigma: PositiveFloat


class QeMfs(_Strict):
    VN: MfSpec = MfSpec(center=-0.5, sigma=0.15)
    N: MfSpec = MfSpec(center=-0.2, sigma=0.15)
    Z: MfSpec = MfSpec(center=0.0, sigma=0.15)


class RxMfs(_Strict):
    M: MfSpec = MfSpec(center=1.0, sigma=0.6)
    H: MfSpec = MfSpec(center=2.5, sigma=0.6)


class InputMfs(_Strict):
    q_e_pu: QeMfs = QeMfs()
    r_over_x: RxMfs = RxMfs()


class JSingletons(_Strict):
    S: float = 20.0
    M: float = 32.5
    L: float = 45.0


class DSingletons(_Strict):
    M: float = 140000.0
    L: float = 165000.0
    VL: float = 190000.0


class KqSingletons(_Strict):
    S: float = 0.1
    M: float = 0.3
    L: float = 0.5


class Singletons(_Strict):
    j: JSingletons = JSingletons()
    d: DSingletons = DSingletons()
    k_q: KqSingletons = KqSingletons()


Range = tuple[float, float]


class Ranges(_Strict):
    j: Range = (20.0, 45.0)
    d: Range = (140000.0, 190000.0)
    k_q: Range = (0.1, 0.5)


class DecouplerSection(_Strict):
    enabled: bool = False
    kq_unit: Literal["v_per_var", "per_unit"] = "v_per_var"
    output_lag_s: float = Field(0.0, ge=0)
    input_mfs: InputMfs = InputMfs()
    singletons: Singletons = Singletons()
    ranges: Ranges = Ranges()


class SimSection(_Strict):
    dt_s: PositiveFloat = 1e-4
    duration_s: float = Field(10.0, ge=0)
    record_stride: int = Field(100, ge=1)
    init: Literal["cold", "steady_state"] = "cold"


class SetPmEvent(_Strict):
    t_s: float = Field(ge=0)
    kind: Literal["set_p_m"]
    p_m_w: float


class SetLoadEvent(_Strict):
    t_s: float = Field(ge=0)
    kind: Literal["set_local_load"]
    load_w: float = Field(ge=0)


class SetGridEvent(_Strict):
    t_s: float = Field(ge=0)
    kind: Literal["set_grid_impedance"]
    r_g_ohm: float = Field(ge=0)
    l_g_henry: float = Field(ge=0)


EventSpec = Annotated[Union[SetPmEvent, SetLoadEvent, SetGridEvent], Field(discriminator="kind")]


class SweepPoint(_Strict):
    name: str
    r_g_ohm: float = Field(ge=0)
    l_g_henry: float = Field(ge=0)


class ScenarioFile(_Strict):
    name: str = "nominal"
    description: str = ""
    grid: GridSection = GridSection()
    vsg: VsgSection = VsgSection()
    decoupler: DecouplerSection = DecouplerSection()
    sim: SimSection = SimSection()
    events: list[EventSpec] = []
    sweep: list[SweepPoint] | None = None

    @field_validator("events")
    @classmethod
    def _sorted(cls, v):
        times = [e.t_s for e in v]
        if times != sorted(times):
            raise ValueError("events must be listed in non-decreasing t_s order")
        return v


# --- loading -----------------------------------------------------------------


def _node_line(root: yaml.Node | None, path: tuple) -> int | None:
    """1-based line of the YAML node at ``path``, or its deepest existing parent."""
    node = root
    line = None if node is None else node.start_mark.line + 1
    for key in path:
        if isinstance(node, yaml.MappingNode):
            nxt = None
            for k, v in node.value:
                if k.value == str(key):
                    nxt = k if key == path[-1] else v
                    break
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            nxt = node.value[key]
        else:
            nxt = None
        if nxt is None:
            break
        node = nxt
        line = node.start_mark.line + 1
    return line


def parse_scenario_text(text: str, source: str = "<string>") -> ScenarioFile:
    try:
        data = yaml.safe_load(text)
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{source}: invalid YAML: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    try:
        return ScenarioFile.model_validate(data)
    except ValidationError as exc:
        lines = []
        for err in exc.errors():
            loc = tuple(err["loc"])
            path = ".".join(str(p) for p in loc) or "<root>"
            ln = _node_line(root, loc)
            where = f"{source}:{ln}" if ln else source
            lines.append(f"{where}: {path}: {err['msg']}")
        raise ConfigError("\n".join(lines)) from exc


def bundled_names() -> list[str]:
    pkg = resources.files("fuzzyvsg") / "scenarios"
    return sorted(p.name[:-5] for p in pkg.iterdir() if p.name.endswith(".yaml"))


def load_scenario_file(ref: str | Path) -> ScenarioFile:
    """Parse a scenario from a path, or from a bundled scenario name."""
    path = Path(ref)
    if path.is_file():
        return parse_scenario_text(path.read_text(), str(path))
    if isinstance(ref, str) and ref in bundled_names():
        res = resources.files("fuzzyvsg") / "scenarios" / f"{ref}.yaml"
        return parse_scenario_text(res.read_text(), f"<bundled:{ref}>")
    raise ConfigError(f"{ref}: no such file or bundled scenario")


def dump_defaults() -> str:
    return dump_scenario(ScenarioFile())


def dump_scenario(sf: ScenarioFile) -> str:
    data = sf.model_dump(mode="json", exclude_none=True)
    return yaml.safe_dump(data, sort_keys=False)


def set_leaf(sf: ScenarioFile, dotted: str, value: float) -> ScenarioFile:
    """Copy of ``sf`` with the numeric leaf at ``dotted`` replaced."""
    data = sf.model_dump(mode="python")
    keys = dotted.split(".")
    node: Any = data
    for k in keys[:-1]:
        if isinstance(node, list):
            node = node[int(k)]
        elif isinstance(node, dict) and k in node:
            node = node[k]
        else:
            raise ConfigError(f"{dotted}: no such key")
    last = keys[-1]
    if isinstance(node, list):
        last = int(last)
        old = node[last] if last < len(node) else None
    elif isinstance(node, dict) and last in node:
        old = node[last]
    else:
        raise ConfigError(f"{dotted}: no such key")
    if isinstance(old, bool) or not isinstance(old, (int, float)):
        raise ConfigError(f"{dotted}: not a numeric leaf")
    node[last] = int(value) if isinstance(old, int) else float(value)
    try:
        return ScenarioFile.model_validate(copy.deepcopy(data))
    except ValidationError as exc:
        raise ConfigError(f"{dotted}={value}: {exc.errors()[0]['msg']}") from exc


# --- conversion ----------------------------------------------------------------


def build_controller(sec: DecouplerSection) -> fuzzy.FuzzyController:
    q = sec.input_mfs.q_e_pu
    rx = sec.input_mfs.r_over_x
    scales = {}
    for name in fuzzy.OUTPUTS:
        lo, hi = getattr(sec.ranges, name)
        scales[name] = fuzzy.OutputScale(getattr(sec.singletons, name).model_dump(), lo, hi)
    return fuzzy.FuzzyController(
        q_mfs=tuple(fuzzy.GaussianMf(getattr(q, lab).center, getattr(q, lab).sigma, lab) for lab in fuzzy.Q_LABELS),
        rx_mfs=tuple(fuzzy.GaussianMf(getattr(rx, lab).center, getattr(rx, lab).sigma, lab) for lab in fuzzy.RX_LABELS),
        scales=scales,
        enabled=sec.enabled,
        kq_unit=sec.kq_unit,
        output_lag_s=sec.output_lag_s,
    )


def _event(spec) -> Event:
    if spec.kind == "set_p_m":
        return Event(spec.t_s, "set_p_m", value=spec.p_m_w)
    if spec.kind == "set_local_load":
        return Event(spec.t_s, "set_local_load", value=spec.load_w)
    return Event(spec.t_s, "set_grid_impedance", r_g=spec.r_g_ohm, l_g=spec.l_g_henry)


def to_scenario(sf: ScenarioFile, name: str | None = None) -> Scenario:
    g, v, s = sf.grid, sf.vsg, sf.sim
    try:
        z = GridImpedance(g.r_g_ohm, g.l_g_henry, g.omega_rad_s)
        net = NetworkConfig(g.v_g_phase_rms_v, z, g.local_load_w, v.e_0_v)
        prm = VsgParams(
            j=v.j, d=v.d, k_q=v.k_q, p_m=v.p_m_w, q_m=v.q_m_var, e_0=v.e_0_v,
            omega_0=g.omega_rad_s, omega_g=g.omega_rad_s, filter_cutoff=v.filter_cutoff_rad_s,
        )
        return Scenario(
            network=net,
            vsg=prm,
            decoupler=build_controller(sf.decoupler),
            dt=s.dt_s,
            duration=s.duration_s,
            events=tuple(_event(e) for e in sf.events),
            record_stride=s.record_stride,
            s_rated=v.s_rated_va,
            init=s.init,
            name=name or sf.name,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def sweep_points(sf: ScenarioFile) -> list[tuple[str, ScenarioFile]]:
    """(row name, scenario) pairs for comparison runs."""
    if sf.sweep is None:
        return [(sf.name, sf)]
    if not sf.sweep:
        raise ConfigError("sweep list is empty")
    out = []
    for pt in sf.sweep:
        grid = sf.grid.model_copy(update={"r_g_ohm": pt.r_g_ohm, "l_g_henry": pt.l_g_henry})
        out.append((pt.name, sf.model_copy(update={"grid": grid, "sweep": None})))
    return out
