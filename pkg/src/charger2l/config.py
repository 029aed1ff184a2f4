"""INI configuration documents.

Four sections are recognized: ``charger`` (plant constants and supply
voltage), ``control`` (optional PI gains and modulator limits), ``scenario``
(simulation setup) and ``sizing`` (ripple budgets in absolute units or
percent). Unknown sections or keys are rejected.
"""

from __future__ import annotations

import configparser
import io
import json
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .control import OMEGA_CONVENTIONS, ModulatorConfig, PiGains
from .errors import ConfigError, ValidationError
from .model import ChargerParams, OperatingPoint, duty_for_current
from .output import atomic_write_text
from .sim import MODES, Scenario

CHARGER_KEYS = ("v_d", "r_ds_on", "r_l", "r_c", "r_b", "l", "c", "f_s", "v_m")
CHARGER_OPTIONAL = {"v_m": 1.0}
CONTROL_KEYS = ("k_p", "tau_i", "d_min", "d_max", "omega_convention")
SCENARIO_KEYS = ("duration", "h", "i_l0", "v_c0", "ref_steps", "vob_steps", "mode")
SCENARIO_OPTIONAL = ("h", "mode")
SIZING_KEYS = ("delta_il", "delta_vc")
SIZING_UNITS = {"delta_il": ("A", "%"), "delta_vc": ("V", "%")}
SECTIONS = {
    "charger": CHARGER_KEYS,
    "control": CONTROL_KEYS,
    "scenario": SCENARIO_KEYS,
    "sizing": SIZING_KEYS,
}

_QUANTITY = re.compile(r"^\s*([-+0-9.eE]+)\s*(A|V|%)\s*$")


def default_config_path() -> Path:
    return Path(str(resources.files("charger2l") / "data" / "paper.cfg"))


@dataclass
class ConfigDocument:
    """Typed contents of a configuration file."""

    charger: dict[str, float]
    scenario: dict[str, object]
    control: dict[str, object] = field(default_factory=dict)
    sizing: dict[str, tuple[float, str]] = field(default_factory=dict)


@dataclass(frozen=True)
class LoadedConfig:
    params: ChargerParams
    gains: PiGains | None  # None: design automatically
    modulator: ModulatorConfig
    omega_convention: str
    scenario: Scenario
    delta_i_l: float  # absolute [A]
    delta_v_c: float  # absolute [V]
    reference_point: OperatingPoint


def _float(section: str, key: str, raw: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"{section}.{key}: expected a number, got {raw!r}") from None
    if not math.isfinite(value):
        raise ConfigError(f"{section}.{key}: value must be finite, got {raw!r}")
    return value


def _pairs(section: str, key: str, raw: str) -> list[list[float]]:
    try:
        value = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{section}.{key}: expected [[t, value], ...], {exc.msg} at column {exc.colno}") from None
    ok = isinstance(value, list) and all(
        isinstance(p, list) and len(p) == 2 and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in p)
        for p in value
    )
    if not ok or not value:
        raise ConfigError(f"{section}.{key}: expected a non-empty list of [t, value] pairs")
    return [[float(t), float(v)] for t, v in value]


def _quantity(section: str, key: str, raw: str) -> tuple[float, str]:
    m = _QUANTITY.match(raw)
    if not m:
        raise ConfigError(f"{section}.{key}: expected '<number> <unit>', got {raw!r}")
    value = _float(section, key, m.group(1))
    unit = m.group(2)
    if unit not in SIZING_UNITS[key]:
        raise ConfigError(f"{section}.{key}: unit must be one of {SIZING_UNITS[key]}, got {unit!r}")
    if not value > 0:
        raise ConfigError(f"{section}.{key}: must be > 0")
    return value, unit


def parse_config(text: str, source: str = "<string>") -> ConfigDocument:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    if parser.defaults():
        raise ConfigError(f"{source}: keys outside any section: {sorted(parser.defaults())}")
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(f"{source}: unknown section [{section}]")
        for key in parser[section]:
            if key not in SECTIONS[section]:
                raise ConfigError(f"{source}: unknown key {section}.{key}")
    for section in ("charger", "scenario"):
        if not parser.has_section(section):
            raise ConfigError(f"{source}: missing section [{section}]")

    sec = parser["charger"]
    charger = {}
    for key in CHARGER_KEYS:
        if key in sec:
            charger[key] = _float("charger", key, sec[key])
        elif key not in CHARGER_OPTIONAL:
            raise ConfigError(f"{source}: missing required key charger.{key}")

    control: dict[str, object] = {}
    if parser.has_section("control"):
        sec = parser["control"]
        for key in ("k_p", "tau_i", "d_min", "d_max"):
            if key in sec:
                control[key] = _float("control", key, sec[key])
        if "omega_convention" in sec:
            conv = sec["omega_convention"].strip()
            if conv not in OMEGA_CONVENTIONS:
                raise ConfigError(f"control.omega_convention: expected one of {OMEGA_CONVENTIONS}, got {conv!r}")
            control["omega_convention"] = conv

    sec = parser["scenario"]
    scenario: dict[str, object] = {}
    for key in SCENARIO_KEYS:
        if key not in sec:
            if key in SCENARIO_OPTIONAL:
                continue
            raise ConfigError(f"{source}: missing required key scenario.{key}")
        if key in ("ref_steps", "vob_steps"):
            scenario[key] = _pairs("scenario", key, sec[key])
        elif key == "mode":
            mode = sec[key].strip()
            if mode not in MODES:
                raise ConfigError(f"scenario.mode: expected one of {MODES}, got {mode!r}")
            scenario[key] = mode
        else:
            scenario[key] = _float("scenario", key, sec[key])

    sizing: dict[str, tuple[float, str]] = {}
    if parser.has_section("sizing"):
        sec = parser["sizing"]
        for key in SIZING_KEYS:
            if key in sec:
                sizing[key] = _quantity("sizing", key, sec[key])

    return ConfigDocument(charger=charger, scenario=scenario, control=control, sizing=sizing)


def read_config(path: str | Path) -> ConfigDocument:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, source=str(path))


def format_config(doc: ConfigDocument) -> str:
    """Serialize ``doc``; floats use ``repr`` so parsing recovers them exactly."""
    buf = io.StringIO()
    buf.write("[charger]\n")
    for key in CHARGER_KEYS:
        if key in doc.charger:
            buf.write(f"{key} = {float(doc.charger[key])!r}\n")
    if doc.control:
        buf.write("\n[control]\n")
        for key in CONTROL_KEYS:
            if key in doc.control:
                value = doc.control[key]
                text = value if isinstance(value, str) else repr(float(value))
                buf.write(f"{key} = {text}\n")
    buf.write("\n[scenario]\n")
    for key in SCENARIO_KEYS:
        if key not in doc.scenario:
            continue
        value = doc.scenario[key]
        if key in ("ref_steps", "vob_steps"):
            text = json.dumps([[float(t), float(v)] for t, v in value])
        elif key == "mode":
            text = str(value)
        else:
            text = repr(float(value))
        buf.write(f"{key} = {text}\n")
    if doc.sizing:
        buf.write("\n[sizing]\n")
        for key in SIZING_KEYS:
            if key in doc.sizing:
                value, unit = doc.sizing[key]
                buf.write(f"{key} = {float(value)!r} {unit}\n")
    return buf.getvalue()


def write_config(doc: ConfigDocument, path: str | Path) -> None:
    atomic_write_text(path, format_config(doc))


def resolve(doc: ConfigDocument) -> LoadedConfig:
    """Validate a document and build the domain objects it describes.

    Percent ripple budgets are resolved against the operating point that
    carries the first current reference at the first battery EMF.
    """
    c = doc.charger
    try:
        params = ChargerParams(
            r_ds_on=c["r_ds_on"],
            r_l=c["r_l"],
            r_c=c["r_c"],
            r_b=c["r_b"],
            inductance=c["l"],
            capacitance=c["c"],
            f_s=c["f_s"],
            v_m=c.get("v_m", CHARGER_OPTIONAL["v_m"]),
        )
        s = doc.scenario
        scenario = Scenario(
            duration=s["duration"],
            i_l0=s["i_l0"],
            v_c0=s["v_c0"],
            v_d=c["v_d"],
            ref_steps=tuple(tuple(p) for p in s["ref_steps"]),
            vob_steps=tuple(tuple(p) for p in s["vob_steps"]),
            mode=s.get("mode", "switched"),
            h=s.get("h"),
        )
        ctl = doc.control
        modulator = ModulatorConfig(
            v_m=params.v_m,
            t_s=params.t_s,
            d_min=ctl.get("d_min", 0.0),
            d_max=ctl.get("d_max", 1.0),
        )
        has_kp, has_ti = "k_p" in ctl, "tau_i" in ctl
        if has_kp != has_ti:
            missing = "control.tau_i" if has_kp else "control.k_p"
            raise ConfigError(f"{missing} is required when the other PI gain is given")
        gains = PiGains(ctl["k_p"], ctl["tau_i"]) if has_kp else None
        ref_point = duty_for_current(params, scenario.ref_steps[0][1], scenario.v_d, scenario.vob_steps[0][1])
    except ConfigError:
        raise
    except ValidationError as exc:
        raise ConfigError(str(exc)) from None

    def absolute(key: str, base: float) -> float:
        value, unit = doc.sizing.get(key, (5.0, "%"))
        return value / 100.0 * abs(base) if unit == "%" else value

    return LoadedConfig(
        params=params,
        gains=gains,
        modulator=modulator,
        omega_convention=str(ctl.get("omega_convention", "2pi_fs")),
        scenario=scenario,
        delta_i_l=absolute("delta_il", ref_point.i_l),
        delta_v_c=absolute("delta_vc", ref_point.v_c),
        reference_point=ref_point,
    )


def load_config(path: str | Path) -> LoadedConfig:
    return resolve(read_config(path))
