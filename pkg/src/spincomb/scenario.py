"""Declarative scenarios: schema, validation, built-ins.

Scenario files are YAML or JSON (JSON is valid YAML).  Keys carry their
unit as a suffix (``_mhz`` means omega/2pi in MHz, ``_ghz``, ``_ns``);
a value may also be written as a string with the same unit, e.g.
``kappa_mhz: "0.4 MHz"``.  Unknown keys and unit mismatches are errors.
"""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .dynamics import DriveSignal, SystemParams, rectangular_drive
from .errors import ConfigError, ParameterError
from .params import CARD
from .spectral import CombConfig, Hole
from .units import ghz, mhz, ns

SOLVERS = ("ode", "volterra", "laplace", "all")
UNIT_SUFFIXES = {"hz": "Hz", "khz": "kHz", "mhz": "MHz", "ghz": "GHz", "s": "s", "ms": "ms", "us": "us", "ns": "ns", "ps": "ps"}
_AUTO = re.compile(r"^\s*auto\s*\(\s*k\s*=\s*(\d+)\s*\)\s*$")
_QUANTITY = re.compile(r"^\s*([-+0-9.eE]+)\s*([A-Za-z]+)\s*$")


@dataclass(frozen=True)
class CombSpec:
    m: int = CARD["m"]
    delta_omega_mhz: float = CARD["delta_omega_mhz"]
    sigma_g_mhz: float = CARD["sigma_g_mhz"]
    gamma_q_mhz: float = CARD["gamma_q_mhz"]
    q: float = CARD["q"]
    omega_c_ghz: float = CARD["omega_c_ghz"]
    omega_s_ghz: float = CARD["omega_s_ghz"]
    omega_over_2pi_mhz: float = CARD["omega_over_2pi_mhz"]

    def config(self) -> CombConfig:
        return CombConfig(
            m=self.m, delta_omega=mhz(self.delta_omega_mhz), omega_s=ghz(self.omega_s_ghz),
            omega_c=ghz(self.omega_c_ghz), sigma_g=mhz(self.sigma_g_mhz),
            coupling=mhz(self.omega_over_2pi_mhz), gamma_q=mhz(self.gamma_q_mhz), q=self.q,
        )

    @property
    def resonant(self) -> bool:
        return self.omega_s_ghz == self.omega_c_ghz


@dataclass(frozen=True)
class SystemSpec:
    kappa_mhz: float = CARD["kappa_mhz"]
    gamma_mhz: float = CARD["gamma_mhz"]
    omega_p_ghz: float | None = None

    def params(self, omega_c_ghz) -> SystemParams:
        wp = None if self.omega_p_ghz is None else ghz(self.omega_p_ghz)
        return SystemParams(mhz(self.kappa_mhz), mhz(self.gamma_mhz), ghz(omega_c_ghz), wp)


@dataclass(frozen=True)
class DriveSpec:
    start_ns: float = 0.0
    duration_ns: float = CARD["pulse_ns"]
    amplitude: float = 1.0

    def signal(self) -> DriveSignal:
        return rectangular_drive(ns(self.start_ns), ns(self.duration_ns), self.amplitude)


@dataclass(frozen=True)
class HoleEntry:
    center_mhz_rel_cavity: float
    fwhm_mhz: float = CARD["hole_fwhm_mhz"]
    depth: float = 1.0

    def hole(self, omega_c) -> Hole:
        return Hole(omega_c + mhz(self.center_mhz_rel_cavity), mhz(self.fwhm_mhz), self.depth)


@dataclass(frozen=True)
class HolePolicy:
    """``none``, ``auto`` (k highest cavity-content peaks) or ``explicit``."""

    kind: str = "none"
    k: int = 0
    holes: tuple[HoleEntry, ...] = ()

    def to_value(self):
        if self.kind == "none":
            return "none"
        if self.kind == "auto":
            return f"auto(k={self.k})"
        return [dataclasses.asdict(h) for h in self.holes]


@dataclass(frozen=True)
class TimeSpec:
    t_end_ns: float = CARD["t_end_ns"]
    step_ns: float = CARD["step_ns"]
    substeps: int = 1


@dataclass(frozen=True)
class SweepSpec:
    omega_over_2pi_mhz: tuple[float, ...] = (8.0, 26.0)
    omega_s_min_mhz_rel_cavity: float = -CARD["sweep_half_range_mhz"]
    omega_s_max_mhz_rel_cavity: float = CARD["sweep_half_range_mhz"]
    points: int = CARD["sweep_points"]

    def grid(self, omega_c):
        return omega_c + mhz(np.linspace(self.omega_s_min_mhz_rel_cavity, self.omega_s_max_mhz_rel_cavity, self.points))


@dataclass(frozen=True)
class Scenario:
    name: str = "default"
    description: str = ""
    comb: CombSpec = field(default_factory=CombSpec)
    system: SystemSpec = field(default_factory=SystemSpec)
    a0: float = 1.0
    drive: DriveSpec | None = None
    holes: HolePolicy = field(default_factory=HolePolicy)
    hole_fwhm_mhz: float = CARD["hole_fwhm_mhz"]
    solver: str = "volterra"
    time: TimeSpec = field(default_factory=TimeSpec)
    n_spins: int = CARD["n_spins"]
    modes: bool = False
    laplace: bool = False
    sweep: SweepSpec | None = None
    sensitivity_shifts: tuple[float, ...] = ()
    out: str | None = None

    def drive_signal(self) -> DriveSignal:
        return DriveSignal() if self.drive is None else self.drive.signal()

    def params(self) -> SystemParams:
        return self.system.params(self.comb.omega_c_ghz)

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "description": self.description,
            "comb": dataclasses.asdict(self.comb),
            "system": dataclasses.asdict(self.system),
            "a0": self.a0,
            "drive": None if self.drive is None else dataclasses.asdict(self.drive),
            "holes": self.holes.to_value(),
            "hole_fwhm_mhz": self.hole_fwhm_mhz,
            "solver": self.solver,
            "time": dataclasses.asdict(self.time),
            "n_spins": self.n_spins,
            "modes": self.modes,
            "laplace": self.laplace,
            "sweep": None if self.sweep is None else {**dataclasses.asdict(self.sweep), "omega_over_2pi_mhz": list(self.sweep.omega_over_2pi_mhz)},
            "sensitivity_shifts": list(self.sensitivity_shifts),
            "out": self.out,
        }
        return d

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)


# --------------------------------------------------------------- parsing

_SECTIONS = {"comb": CombSpec, "system": SystemSpec, "drive": DriveSpec, "time": TimeSpec, "sweep": SweepSpec}
_TOP_LEVEL = {f.name for f in dataclasses.fields(Scenario)}


def _split_suffix(key):
    stem, _, suffix = key.rpartition("_")
    return (stem, suffix) if stem and suffix in UNIT_SUFFIXES else (key, None)


def _check_keys(mapping, allowed, where):
    for key in mapping:
        if not isinstance(key, str):
            raise ConfigError(f"{where}: keys must be strings, got {key!r}")
        if key in allowed:
            continue
        stem, suffix = _split_suffix(key)
        for other in allowed:
            ostem, osuffix = _split_suffix(other)
            if suffix and osuffix and ostem == stem:
                raise ConfigError(f"{where}: unit suffix mismatch in key '{key}'; expected '{other}'")
        raise ConfigError(f"{where}: unknown key '{key}' (allowed: {', '.join(sorted(allowed))})")


def _number(key, value, where, kind=float):
    _, suffix = _split_suffix(key)
    if isinstance(value, str):
        m = _QUANTITY.match(value)
        if not m or suffix is None:
            raise ConfigError(f"{where}: cannot read '{key}: {value}' as a number")
        unit = m.group(2).lower()
        if unit != suffix:
            raise ConfigError(f"{where}: unit suffix mismatch for '{key}': value given in {m.group(2)}, key expects {UNIT_SUFFIXES[suffix]}")
        value = float(m.group(1))
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: '{key}' must be a number, got {value!r}")
    if kind is int:
        if float(value) != int(value):
            raise ConfigError(f"{where}: '{key}' must be an integer, got {value!r}")
        return int(value)
    return float(value)


def _section(cls, raw, where):
    if raw is None:
        return None
    if not isinstance(raw, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(raw).__name__}")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    _check_keys(raw, fields, where)
    kwargs = {}
    for key, value in raw.items():
        default = fields[key].default
        if key == "omega_over_2pi_mhz" and cls is SweepSpec:
            if not isinstance(value, list) or not value:
                raise ConfigError(f"{where}: '{key}' must be a non-empty list")
            kwargs[key] = tuple(_number(key, v, where) for v in value)
        elif value is None and default is None:
            kwargs[key] = None
        else:
            kwargs[key] = _number(key, value, where, int if isinstance(default, int) and not isinstance(default, bool) else float)
    return cls(**kwargs)


def _holes(raw, where="holes") -> HolePolicy:
    if raw is None or raw == "none" or raw == []:
        return HolePolicy()
    if isinstance(raw, str):
        m = _AUTO.match(raw)
        if not m:
            raise ConfigError(f"{where}: expected 'none', 'auto(k=N)' or a list, got {raw!r}")
        k = int(m.group(1))
        if k < 1:
            raise ConfigError(f"{where}: auto hole count must be positive")
        return HolePolicy("auto", k)
    if isinstance(raw, list):
        entries = tuple(_section(HoleEntry, h, f"{where}[{i}]") for i, h in enumerate(raw))
        return HolePolicy("explicit", 0, entries)
    raise ConfigError(f"{where}: unsupported hole specification {raw!r}")


def _bool(key, value):
    if not isinstance(value, bool):
        raise ConfigError(f"'{key}' must be true or false, got {value!r}")
    return value


def scenario_from_dict(raw: dict | None, default_name="default") -> Scenario:
    raw = {} if raw is None else raw
    if not isinstance(raw, dict):
        raise ConfigError("scenario file must contain a mapping at top level")
    _check_keys(raw, _TOP_LEVEL, "scenario")
    kw = {}
    for key, value in raw.items():
        if key in _SECTIONS:
            kw[key] = _section(_SECTIONS[key], value, key)
        elif key == "holes":
            kw[key] = _holes(value)
        elif key in ("name", "description", "out"):
            if value is not None and not isinstance(value, str):
                raise ConfigError(f"'{key}' must be a string")
            kw[key] = value if value is not None or key == "out" else ""
        elif key == "solver":
            if value not in SOLVERS:
                raise ConfigError(f"solver must be one of {', '.join(SOLVERS)}, got {value!r}")
            kw[key] = value
        elif key in ("modes", "laplace"):
            kw[key] = _bool(key, value)
        elif key == "n_spins":
            kw[key] = _number(key, value, "scenario", int)
        elif key == "sensitivity_shifts":
            if not isinstance(value, list):
                raise ConfigError("'sensitivity_shifts' must be a list")
            kw[key] = tuple(_number(key, v, "scenario") for v in value)
        else:
            kw[key] = _number(key, value, "scenario")
    for key in ("comb", "system", "time"):
        if key in kw and kw[key] is None:
            del kw[key]
    kw.setdefault("name", default_name)
    s = Scenario(**kw)
    validate(s)
    return s


def validate(s: Scenario) -> Scenario:
    """Check cross-field consistency; raises ConfigError."""
    try:
        s.comb.config().validate()
        s.params()
        if s.drive is not None:
            s.drive.signal()
        if s.holes.kind == "explicit":
            for h in s.holes.holes:
                h.hole(0.0)
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc
    if s.holes.kind == "auto" and not s.comb.resonant:
        raise ConfigError("auto hole placement needs a resonant comb (omega_s_ghz == omega_c_ghz)")
    if s.hole_fwhm_mhz <= 0:
        raise ConfigError("hole_fwhm_mhz must be positive")
    if s.time.t_end_ns <= 0 or s.time.step_ns <= 0 or s.time.substeps < 1:
        raise ConfigError("time window, step and substeps must be positive")
    if s.n_spins < 2:
        raise ConfigError("n_spins must be at least 2")
    if s.sweep is not None and (s.sweep.points < 1 or s.sweep.omega_s_max_mhz_rel_cavity <= s.sweep.omega_s_min_mhz_rel_cavity and s.sweep.points > 1):
        raise ConfigError("sweep needs points >= 1 and an increasing detuning range")
    if s.solver == "laplace" and s.holes.kind != "none":
        raise ConfigError("the laplace solver excludes holes; choose ode or volterra")
    if s.solver == "laplace" and (s.drive is not None or s.a0 != 1.0):
        raise ConfigError("the laplace solver covers the single-photon case only (a0 = 1, no drive)")
    return s


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML/JSON: {exc}") from exc
    return scenario_from_dict(raw, default_name=path.stem)


# ------------------------------------------------------------- built-ins

_LONG = TimeSpec(t_end_ns=CARD["long_t_end_ns"])
_PULSE = DriveSpec()

BUILTIN = {
    "fig2a": Scenario("fig2a", "single photon, Rabi regime", CombSpec(omega_over_2pi_mhz=8.0), solver="all", modes=True),
    "fig2b": Scenario("fig2b", "6 ns pulse, Rabi regime", CombSpec(omega_over_2pi_mhz=8.0), a0=0.0, drive=_PULSE, solver="ode"),
    "fig2c": Scenario("fig2c", "single photon, multimode revivals", CombSpec(), solver="all", laplace=True),
    "fig2d": Scenario("fig2d", "6 ns pulse, multimode revivals without holes", CombSpec(), a0=0.0, drive=_PULSE, solver="volterra"),
    "fig3sweep": Scenario("fig3sweep", "eigenmodes versus comb detuning", CombSpec(), solver="volterra", sweep=SweepSpec()),
    "fig4": Scenario("fig4", "8 burnt holes, 6 ns pulse, 3 us", CombSpec(), a0=0.0, drive=_PULSE,
                     holes=HolePolicy("auto", CARD["hole_count"]), solver="volterra", time=_LONG, modes=True,
                     sensitivity_shifts=(-0.1, -0.03, 0.0, 0.03, 0.1)),
    "figS2": Scenario("figS2", "Lamb shift, branch-cut kernel and resonances", CombSpec(), solver="laplace", laplace=True),
}


def resolve_scenario(ref: str) -> Scenario:
    """Built-in name or path to a scenario file."""
    if ref in BUILTIN:
        return BUILTIN[ref]
    p = Path(ref)
    if p.exists():
        return load_scenario(p)
    raise ConfigError(f"'{ref}' is neither a built-in scenario ({', '.join(BUILTIN)}) nor an existing file")
