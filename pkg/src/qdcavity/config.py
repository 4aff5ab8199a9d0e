"""Scenario configuration: parsing, validation, serialization, presets.

Grammar: INI-style sections with ``key = value`` pairs, ``#`` comments,
units spelled in the key names.

[scenario]   mode = pulsed | two_time | spectrum ; dephasing = on | off
[system]     g_ueV, delta_ueV, gamma_c_ueV, gamma_xx_x_ueV, gamma_x_g_ueV
             (required) and omega_x_ueV, gamma_c_out_ueV, gamma_d1_ueV,
             gamma_d2_ueV, fock_cutoff (optional)
[drive.<name>]
             kind = gaussian | cw ; target = qd | cavity
             gaussian: area_pi, fwhm_ps, t_center_ps [, detuning_ueV]
             cw:       amplitude_ueV [, detuning_ueV]
[grid]       pulsed:   t_start_ps (default 0), t_stop_ps, t_points
             two_time: t_start_ps (default 0), t_stop_ps, t1_points, t2_points
             spectrum: detuning_start_ueV, detuning_stop_ueV, detuning_points
[numerics]   tolerance, include_detuned_terms, workers (all optional)
[output]     path, format = csv | csv+svg (optional)

Unknown sections or keys are errors; nothing is silently ignored.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError
from .model import DriveEnvelope, SystemParams

MAX_GRID_POINTS = 1_000_000

_MODES = ("pulsed", "two_time", "spectrum")

_BOOL_WORDS = {"on": True, "true": True, "yes": True, "1": True,
               "off": False, "false": False, "no": False, "0": False}


@dataclass(frozen=True)
class TimeGridSpec:
    t_start_ps: float
    t_stop_ps: float
    t_points: int

    def times(self):
        return np.linspace(self.t_start_ps, self.t_stop_ps, self.t_points)


@dataclass(frozen=True)
class TwoTimeGridSpec:
    t_start_ps: float
    t_stop_ps: float
    t1_points: int
    t2_points: int

    def t1_axis(self):
        return np.linspace(self.t_start_ps, self.t_stop_ps, self.t1_points)

    def t2_axis(self):
        return np.linspace(self.t_start_ps, self.t_stop_ps, self.t2_points)


@dataclass(frozen=True)
class DetuningGridSpec:
    start_ueV: float
    stop_ueV: float
    points: int

    def detunings(self):
        return np.linspace(self.start_ueV, self.stop_ueV, self.points)


@dataclass(frozen=True)
class ScenarioConfig:
    mode: str
    params: SystemParams
    drives: tuple  # ordered (name, DriveEnvelope) pairs
    grid: object
    dephasing_enabled: bool = True
    tolerance: float = 1e-9
    include_detuned_terms: bool = True
    workers: int = 1
    output_path: str = "out"
    output_format: str = "csv"

    def effective_params(self):
        """System parameters with dephasing zeroed when the toggle is off."""
        if self.dephasing_enabled:
            return self.params
        return replace(self.params, gamma_d1=0.0, gamma_d2=0.0)

    def drive_envelopes(self):
        return [env for _, env in self.drives]


def _parse_float(section, key, raw):
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: expected a number, got {raw!r}") from None
    if not math.isfinite(value):
        raise ConfigError(f"[{section}] {key}: must be finite, got {raw!r}")
    return value


def _parse_int(section, key, raw):
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: expected an integer, got {raw!r}") from None


def _parse_bool(section, key, raw):
    word = raw.strip().lower()
    if word not in _BOOL_WORDS:
        raise ConfigError(f"[{section}] {key}: expected on/off, got {raw!r}")
    return _BOOL_WORDS[word]


class _Section(dict):
    """Mutable view of one config section that tracks consumed keys."""

    def __init__(self, name, items):
        super().__init__(items)
        self.name = name

    def take(self, key, parser=None, default=None, required=False):
        if key not in self:
            if required:
                raise ConfigError(f"[{self.name}] missing required key {key}")
            return default
        raw = self.pop(key)
        return parser(self.name, key, raw) if parser else raw

    def reject_leftovers(self):
        if self:
            key = sorted(self)[0]
            raise ConfigError(f"[{self.name}] unknown key {key}")


def _build_params(sec):
    kwargs = dict(
        g=sec.take("g_ueV", _parse_float, required=True),
        delta=sec.take("delta_ueV", _parse_float, required=True),
        gamma_c=sec.take("gamma_c_ueV", _parse_float, required=True),
        gamma_xx_x=sec.take("gamma_xx_x_ueV", _parse_float, required=True),
        gamma_x_g=sec.take("gamma_x_g_ueV", _parse_float, required=True),
        omega_x=sec.take("omega_x_ueV", _parse_float, default=0.0),
        gamma_c_out=sec.take("gamma_c_out_ueV", _parse_float, default=None),
        gamma_d1=sec.take("gamma_d1_ueV", _parse_float, default=0.0),
        gamma_d2=sec.take("gamma_d2_ueV", _parse_float, default=0.0),
        fock_cutoff=sec.take("fock_cutoff", _parse_int, default=5),
    )
    sec.reject_leftovers()
    try:
        return SystemParams(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"[system] {exc}") from None


def _build_drive(sec):
    kind = sec.take("kind", required=True)
    target = sec.take("target", required=True)
    try:
        if kind == "gaussian":
            env = DriveEnvelope.gaussian_pulse(
                target=target,
                area=sec.take("area_pi", _parse_float, required=True),
                fwhm=sec.take("fwhm_ps", _parse_float, required=True),
                t_center=sec.take("t_center_ps", _parse_float, required=True),
                detuning=sec.take("detuning_ueV", _parse_float, default=0.0),
            )
        elif kind == "cw":
            env = DriveEnvelope.cw(
                target=target,
                amplitude=sec.take("amplitude_ueV", _parse_float, required=True),
                detuning=sec.take("detuning_ueV", _parse_float, default=0.0),
            )
        else:
            raise ConfigError(f"[{sec.name}] kind must be 'gaussian' or 'cw', got {kind!r}")
    except ValueError as exc:
        raise ConfigError(f"[{sec.name}] {exc}") from None
    sec.reject_leftovers()
    return env


def _build_grid(sec, mode):
    def positive_points(key, limit_name="grid"):
        n = sec.take(key, _parse_int, required=True)
        if n < 2:
            raise ConfigError(f"[grid] {key}: need at least 2 points, got {n}")
        return n

    if mode == "pulsed":
        grid = TimeGridSpec(
            t_start_ps=sec.take("t_start_ps", _parse_float, default=0.0),
            t_stop_ps=sec.take("t_stop_ps", _parse_float, required=True),
            t_points=positive_points("t_points"),
        )
        if grid.t_stop_ps <= grid.t_start_ps:
            raise ConfigError("[grid] t_stop_ps must exceed t_start_ps")
        total = grid.t_points
    elif mode == "two_time":
        grid = TwoTimeGridSpec(
            t_start_ps=sec.take("t_start_ps", _parse_float, default=0.0),
            t_stop_ps=sec.take("t_stop_ps", _parse_float, required=True),
            t1_points=positive_points("t1_points"),
            t2_points=positive_points("t2_points"),
        )
        if grid.t_stop_ps <= grid.t_start_ps:
            raise ConfigError("[grid] t_stop_ps must exceed t_start_ps")
        if grid.t_start_ps < 0.0:
            raise ConfigError("[grid] t_start_ps must be >= 0 for two-time grids")
        total = grid.t1_points * grid.t2_points
    elif mode == "spectrum":
        grid = DetuningGridSpec(
            start_ueV=sec.take("detuning_start_ueV", _parse_float, required=True),
            stop_ueV=sec.take("detuning_stop_ueV", _parse_float, required=True),
            points=positive_points("detuning_points"),
        )
        if grid.stop_ueV <= grid.start_ueV:
            raise ConfigError("[grid] detuning_stop_ueV must exceed detuning_start_ueV")
        total = grid.points
    else:  # pragma: no cover - mode validated earlier
        raise ConfigError(f"unknown mode {mode!r}")
    sec.reject_leftovers()
    if total > MAX_GRID_POINTS:
        raise ConfigError(f"[grid] grid too large: {total} points exceeds {MAX_GRID_POINTS}")
    return grid


def _validate_spectrum_drives(drives):
    cavity = [env for _, env in drives if env.target == "cavity"]
    qd = [env for _, env in drives if env.target == "qd"]
    if any(env.kind != "cw" for _, env in drives):
        raise ConfigError("spectrum mode accepts cw drives only")
    if len(cavity) != 1:
        raise ConfigError("spectrum mode needs exactly one cw cavity drive")
    if len(qd) > 1:
        raise ConfigError("spectrum mode accepts at most one cw qd drive")
    for env in cavity + qd:
        if env.detuning != 0.0:
            raise ConfigError("spectrum-mode drive detunings must be 0; the sweep sets them")


def parse_config(text):
    """Parse and fully validate a scenario document; see module docstring."""
    cp = configparser.ConfigParser(delimiters=("=",), comment_prefixes=("#",),
                                   inline_comment_prefixes=("#",), strict=True,
                                   interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"parse error: {exc}") from None

    sections = {name: _Section(name, cp.items(name)) for name in cp.sections()}
    known = {"scenario", "system", "grid", "numerics", "output"}
    for name in sections:
        if name not in known and not name.startswith("drive."):
            raise ConfigError(f"unknown section [{name}]")

    scenario = sections.pop("scenario", None)
    if scenario is None or "mode" not in scenario:
        raise ConfigError("missing mode ([scenario] mode = pulsed | two_time | spectrum)")
    mode = scenario.take("mode")
    if mode not in _MODES:
        raise ConfigError(f"[scenario] mode must be one of {_MODES}, got {mode!r}")
    dephasing = scenario.take("dephasing", _parse_bool, default=True)
    scenario.reject_leftovers()

    if "system" not in sections:
        raise ConfigError("missing [system] section")
    params = _build_params(sections.pop("system"))

    drives = []
    for name in list(sections):
        if name.startswith("drive."):
            label = name[len("drive."):]
            if not label:
                raise ConfigError("drive sections need a name, e.g. [drive.control]")
            drives.append((label, _build_drive(sections.pop(name))))

    if "grid" not in sections:
        raise ConfigError("missing [grid] section")
    grid = _build_grid(sections.pop("grid"), mode)

    numerics = sections.pop("numerics", _Section("numerics", []))
    tolerance = numerics.take("tolerance", _parse_float, default=1e-9)
    if tolerance <= 0.0:
        raise ConfigError("[numerics] tolerance must be > 0")
    include_detuned = numerics.take("include_detuned_terms", _parse_bool, default=True)
    workers = numerics.take("workers", _parse_int, default=1)
    if workers < 1:
        raise ConfigError("[numerics] workers must be >= 1")
    numerics.reject_leftovers()

    output = sections.pop("output", _Section("output", []))
    path = output.take("path", default="out")
    fmt = output.take("format", default="csv")
    if fmt not in ("csv", "csv+svg"):
        raise ConfigError(f"[output] format must be csv or csv+svg, got {fmt!r}")
    output.reject_leftovers()

    cfg = ScenarioConfig(mode=mode, params=params, drives=tuple(drives), grid=grid,
                         dephasing_enabled=dephasing, tolerance=tolerance,
                         include_detuned_terms=include_detuned, workers=workers,
                         output_path=path, output_format=fmt)
    if mode == "spectrum":
        _validate_spectrum_drives(cfg.drives)
    return cfg


def _fmt_value(v):
    if isinstance(v, bool):
        return "on" if v else "off"
    if isinstance(v, (int, str)):
        return str(v)
    return f"{v:.17g}"


def serialize_config(cfg):
    """Canonical text form; parse_config(serialize_config(c)) == c."""
    out = io.StringIO()

    def section(name, pairs):
        out.write(f"[{name}]\n")
        for k, v in pairs:
            out.write(f"{k} = {_fmt_value(v)}\n")
        out.write("\n")

    section("scenario", [("mode", cfg.mode), ("dephasing", cfg.dephasing_enabled)])
    p = cfg.params
    section("system", [
        ("g_ueV", p.g), ("delta_ueV", p.delta), ("omega_x_ueV", p.omega_x),
        ("gamma_c_ueV", p.gamma_c), ("gamma_c_out_ueV", p.gamma_c_out),
        ("gamma_xx_x_ueV", p.gamma_xx_x), ("gamma_x_g_ueV", p.gamma_x_g),
        ("gamma_d1_ueV", p.gamma_d1), ("gamma_d2_ueV", p.gamma_d2),
        ("fock_cutoff", p.fock_cutoff),
    ])
    for name, env in cfg.drives:
        if env.kind == "gaussian":
            pairs = [("kind", env.kind), ("target", env.target), ("area_pi", env.area),
                     ("fwhm_ps", env.fwhm), ("t_center_ps", env.t_center),
                     ("detuning_ueV", env.detuning)]
        else:
            pairs = [("kind", env.kind), ("target", env.target),
                     ("amplitude_ueV", env.amplitude), ("detuning_ueV", env.detuning)]
        section(f"drive.{name}", pairs)
    g = cfg.grid
    if cfg.mode == "pulsed":
        section("grid", [("t_start_ps", g.t_start_ps), ("t_stop_ps", g.t_stop_ps),
                         ("t_points", g.t_points)])
    elif cfg.mode == "two_time":
        section("grid", [("t_start_ps", g.t_start_ps), ("t_stop_ps", g.t_stop_ps),
                         ("t1_points", g.t1_points), ("t2_points", g.t2_points)])
    else:
        section("grid", [("detuning_start_ueV", g.start_ueV),
                         ("detuning_stop_ueV", g.stop_ueV),
                         ("detuning_points", g.points)])
    section("numerics", [("tolerance", cfg.tolerance),
                         ("include_detuned_terms", cfg.include_detuned_terms),
                         ("workers", cfg.workers)])
    section("output", [("path", cfg.output_path), ("format", cfg.output_format)])
    return out.getvalue()


# Reference scenarios. Pulse centers put the cavity pulse 3 ps after the
# control pulse; the 120 ps window covers several Rabi periods of decay and
# the 0.05 ps sampling resolves the 1.03 ps detuned-term ripples.
_PULSED_PARAMS = dict(g=100.0, delta=4000.0, gamma_c=70.0, gamma_xx_x=30.0,
                      gamma_x_g=20.0, fock_cutoff=5)
_PULSED_DRIVES = (
    ("control", DriveEnvelope.gaussian_pulse("qd", area=0.012, fwhm=5.0, t_center=10.0)),
    ("probe", DriveEnvelope.gaussian_pulse("cavity", area=0.02, fwhm=5.0, t_center=13.0)),
)

PRESET_NAMES = ("fig2", "fig2_dephasing", "fig3a", "fig3c")


def preset(name):
    """Bundled complete scenarios; see PRESET_NAMES."""
    if name == "fig2":
        return ScenarioConfig(
            mode="pulsed", params=SystemParams(**_PULSED_PARAMS),
            drives=_PULSED_DRIVES,
            grid=TimeGridSpec(t_start_ps=0.0, t_stop_ps=120.0, t_points=2401),
            tolerance=1e-11, output_path="out/fig2")
    if name == "fig2_dephasing":
        return ScenarioConfig(
            mode="pulsed",
            params=SystemParams(**_PULSED_PARAMS, gamma_d1=15.0, gamma_d2=20.0),
            drives=_PULSED_DRIVES,
            grid=TimeGridSpec(t_start_ps=0.0, t_stop_ps=120.0, t_points=2401),
            tolerance=1e-11, output_path="out/fig2_dephasing")
    if name == "fig3a":
        return ScenarioConfig(
            mode="two_time", params=SystemParams(**_PULSED_PARAMS),
            drives=_PULSED_DRIVES,
            grid=TwoTimeGridSpec(t_start_ps=0.0, t_stop_ps=120.0,
                                 t1_points=100, t2_points=100),
            tolerance=1e-10, output_path="out/fig3a")
    if name == "fig3c":
        return ScenarioConfig(
            mode="spectrum",
            params=SystemParams(g=50.0, delta=4000.0, gamma_c=70.0, gamma_xx_x=30.0,
                                gamma_x_g=20.0, fock_cutoff=5),
            drives=(("input", DriveEnvelope.cw("cavity", amplitude=3.0)),
                    ("control", DriveEnvelope.cw("qd", amplitude=1.0))),
            grid=DetuningGridSpec(start_ueV=-300.0, stop_ueV=300.0, points=601),
            output_path="out/fig3c")
    raise ConfigError(f"unknown preset {name!r}; known presets: {', '.join(PRESET_NAMES)}")
