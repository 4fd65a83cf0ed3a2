"""Declarative run configuration: schema, validation and round-trip printing.

A scenario is a YAML mapping.  Every key has a default except ``mode`` (and
``dt`` outside the identity-suite mode).  Example::

    mode: analytic-fields
    dt: 0.00628318530718
    steps: 1000
    field:
      preset: uniform
      B: [0, 0, 1]
    particles:
      - {m0: 1, q_e: 1, x0: [0, 0, 0], v0: [0.1, 0, 0]}

Top level keys
    mode             analytic-fields | grid-evolution | identity-suite
    c                speed of light in code units (default 1; use 2.998e10 for cgs)
    dt, steps        time step and number of steps (steps default 1000)
    splitting        BEB (default) or EBE ordering of the lattice update
    seed             integer seed for ``random_particles`` (default 0)
    field            external field preset, see :class:`FieldSpec`
    particles        list of :class:`ParticleSpec`
    random_particles extra particles drawn from ``seed``, see :class:`RandomParticles`
    grid             lattice settings for grid-evolution, see :class:`GridSpec`
    diagnostics      record cadence and error estimate, see :class:`DiagnosticsSpec`
    output           file names and dump cadence, see :class:`OutputSpec`
"""
from __future__ import annotations

import dataclasses
import difflib
import math
from dataclasses import dataclass, fields

import yaml

from .errors import ConfigurationError

_default = dataclasses.field

__all__ = [
    "Scenario",
    "FieldSpec",
    "ParticleSpec",
    "RandomParticles",
    "GridSpec",
    "DiagnosticsSpec",
    "OutputSpec",
    "ScenarioError",
    "parse_scenario",
    "print_scenario",
    "scenario_to_dict",
    "MODES",
    "PRESETS",
]

MODES = ("analytic-fields", "grid-evolution", "identity-suite")
PRESETS = ("none", "uniform", "plane-wave", "point-dyon", "grid-init")


class ScenarioError(ConfigurationError):
    """Invalid scenario; ``errors`` lists every failure found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid scenario:\n  " + "\n  ".join(self.errors))


Vec = tuple  # 3-tuple of floats


@dataclass(frozen=True)
class FieldSpec:
    """External field.

    preset       none | uniform | plane-wave | point-dyon | grid-init
    E, B         uniform field vectors (uniform)
    split        uniform only: ``scalar`` builds E, B from the two scalar
                 potentials, ``vector`` from the two vector potentials
    amplitude    plane wave peak field; the wave travels along +x with E along y
    wavenumber   plane wave k; defaults to one period across the grid in grid mode
    polarization plane wave carried by potential ``A`` or ``C``
    q_e, q_m     point dyon charges
    position     point dyon location (it is held fixed)
    path         grid-init: prefix of a field dump to start from
    """

    preset: str = "none"
    E: Vec = (0.0, 0.0, 0.0)
    B: Vec = (0.0, 0.0, 0.0)
    split: str = "scalar"
    amplitude: float = 1.0
    wavenumber: float | None = None
    polarization: str = "A"
    q_e: float = 0.0
    q_m: float = 0.0
    position: Vec = (0.0, 0.0, 0.0)
    path: str | None = None


@dataclass(frozen=True)
class ParticleSpec:
    m0: float = 1.0
    q_e: float = 0.0
    q_m: float = 0.0
    x0: Vec = (0.0, 0.0, 0.0)
    v0: Vec = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class RandomParticles:
    """``count`` particles placed uniformly in ``[lo, hi)^3`` with speeds below ``max_speed``."""

    count: int = 0
    m0: float = 1.0
    q_e: float = 0.0
    q_m: float = 0.0
    lo: float = 0.0
    hi: float = 1.0
    max_speed: float = 0.1


@dataclass(frozen=True)
class GridSpec:
    """Periodic box ``[0, extent)^3`` with spacing ``h``.

    shape_order  B-spline order 1..3 of the particle shape (support radius
                 ``(order + 1) h / 2``, so 2h for the default 3)
    self_field   deposit particles onto the lattice and evolve their own fields
    """

    extent: Vec = (1.0, 1.0, 1.0)
    h: float = 0.0625
    boundary: str = "periodic"
    shape_order: int = 3
    self_field: bool = True

    @property
    def shape(self) -> tuple:
        return tuple(int(round(L / self.h)) for L in self.extent)


@dataclass(frozen=True)
class DiagnosticsSpec:
    """cadence: record every N steps (the last step is always recorded).

    error_estimate: grid mode also runs a companion at 2h, 2dt and reports a
    drift bound scaled from it.
    """

    cadence: int = 1
    error_estimate: bool = True


@dataclass(frozen=True)
class OutputSpec:
    records: str = "records.jsonl"
    summary: str = "summary.json"
    dump_every: int = 0
    label: str = ""


@dataclass(frozen=True)
class Scenario:
    mode: str
    dt: float | None = None
    steps: int = 1000
    c: float = 1.0
    splitting: str = "BEB"
    seed: int = 0
    field: FieldSpec = _default(default_factory=FieldSpec)
    particles: tuple = ()
    random_particles: RandomParticles = _default(default_factory=RandomParticles)
    grid: GridSpec = _default(default_factory=GridSpec)
    diagnostics: DiagnosticsSpec = _default(default_factory=DiagnosticsSpec)
    output: OutputSpec = _default(default_factory=OutputSpec)

    def with_seed(self, seed: int) -> "Scenario":
        return dataclasses.replace(self, seed=int(seed))


_NESTED = {
    "field": FieldSpec,
    "random_particles": RandomParticles,
    "grid": GridSpec,
    "diagnostics": DiagnosticsSpec,
    "output": OutputSpec,
}
_VECTORS = {"E", "B", "position", "x0", "v0"}


class _Collector:
    def __init__(self):
        self.errors = []

    def add(self, msg):
        self.errors.append(msg)


def _unknown(where, keys, allowed, col):
    for key in keys:
        if key not in allowed:
            near = difflib.get_close_matches(str(key), list(allowed), n=1)
            hint = f"; did you mean {near[0]!r}?" if near else ""
            col.add(f"{where}unknown key {key!r}{hint}")


def _number(val, where, col, integer=False):
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        col.add(f"{where} must be a number, got {val!r}")
        return None
    if integer:
        if isinstance(val, float) and not val.is_integer():
            col.add(f"{where} must be an integer, got {val!r}")
            return None
        return int(val)
    val = float(val)
    if not math.isfinite(val):
        col.add(f"{where} must be finite")
        return None
    return val


def _vector(val, where, col):
    if not isinstance(val, (list, tuple)) or len(val) != 3:
        col.add(f"{where} must be a list of three numbers")
        return None
    out = [_number(v, f"{where}[{i}]", col) for i, v in enumerate(val)]
    return None if any(v is None for v in out) else tuple(out)


def _build(cls, data, where, col):
    """Instantiate a flat dataclass from a mapping, coercing types."""
    if data is None:
        data = {}
    if not isinstance(data, dict):
        col.add(f"{where} must be a mapping")
        return cls()
    names = {f.name: f for f in fields(cls)}
    _unknown(f"{where}: " if where else "", data.keys(), names, col)
    kwargs = {}
    for name, f in names.items():
        if name not in data:
            continue
        val = data[name]
        label = f"{where}.{name}" if where else name
        if name in _VECTORS or (cls is GridSpec and name == "extent"):
            if cls is GridSpec and isinstance(val, (int, float)) and not isinstance(val, bool):
                val = [val] * 3
            vec = _vector(val, label, col)
            if vec is not None:
                kwargs[name] = vec
        elif isinstance(f.default, bool):
            if not isinstance(val, bool):
                col.add(f"{label} must be true or false")
            else:
                kwargs[name] = val
        elif isinstance(f.default, str) or name in ("path",):
            if val is None and name == "path":
                kwargs[name] = None
            elif not isinstance(val, str):
                col.add(f"{label} must be a string")
            else:
                kwargs[name] = val
        elif isinstance(f.default, int):
            num = _number(val, label, col, integer=True)
            if num is not None:
                kwargs[name] = num
        else:
            if val is None and f.default is None:
                kwargs[name] = None
                continue
            num = _number(val, label, col)
            if num is not None:
                kwargs[name] = num
    return cls(**kwargs)


def _validate(s: Scenario, col: _Collector) -> None:
    if s.mode not in MODES:
        near = difflib.get_close_matches(str(s.mode), MODES, n=1)
        hint = f"; did you mean {near[0]!r}?" if near else ""
        col.add(f"mode must be one of {', '.join(MODES)}, got {s.mode!r}{hint}")
    if not s.c > 0:
        col.add("c must be positive")
    if s.mode != "identity-suite":
        if s.dt is None:
            col.add("dt is required")
        elif not s.dt > 0:
            col.add("dt must be positive")
    if s.steps < 0:
        col.add("steps must be non-negative")
    if s.splitting not in ("BEB", "EBE"):
        col.add(f"splitting must be BEB or EBE, got {s.splitting!r}")

    f = s.field
    if f.preset not in PRESETS:
        near = difflib.get_close_matches(f.preset, PRESETS, n=1)
        hint = f"; did you mean {near[0]!r}?" if near else ""
        col.add(f"field.preset must be one of {', '.join(PRESETS)}, got {f.preset!r}{hint}")
    if f.split not in ("scalar", "vector"):
        col.add("field.split must be scalar or vector")
    if f.polarization not in ("A", "C"):
        col.add("field.polarization must be A or C")
    if f.preset == "plane-wave":
        if f.wavenumber is not None and not f.wavenumber > 0:
            col.add("field.wavenumber must be positive")
        if f.wavenumber is None and s.mode != "grid-evolution":
            col.add("field.wavenumber is required for a plane wave outside grid mode")
    if f.preset == "grid-init":
        if s.mode != "grid-evolution":
            col.add("field.preset grid-init needs mode grid-evolution")
        if not f.path:
            col.add("field.path is required for grid-init")

    for i, p in enumerate(s.particles):
        if not p.m0 > 0:
            col.add(f"particles[{i}].m0 must be positive")
        if math.sqrt(sum(v * v for v in p.v0)) >= s.c:
            col.add(f"particles[{i}].v0 must satisfy |v0| < c")
    r = s.random_particles
    if r.count < 0:
        col.add("random_particles.count must be non-negative")
    if r.count > 0:
        if not r.m0 > 0:
            col.add("random_particles.m0 must be positive")
        if not 0 <= r.max_speed < s.c:
            col.add("random_particles.max_speed must satisfy 0 <= max_speed < c")
        if not r.hi > r.lo:
            col.add("random_particles.hi must exceed lo")

    d = s.diagnostics
    if d.cadence < 1:
        col.add("diagnostics.cadence must be at least 1")
    if s.output.dump_every < 0:
        col.add("output.dump_every must be non-negative")
    for name in ("records", "summary"):
        if not getattr(s.output, name):
            col.add(f"output.{name} must be a non-empty file name")

    if s.mode == "grid-evolution":
        g = s.grid
        if not g.h > 0:
            col.add("grid.h must be positive")
        else:
            for a, L in enumerate(g.extent):
                n = L / g.h
                if not L > 0:
                    col.add(f"grid.extent[{a}] must be positive")
                elif abs(n - round(n)) > 1e-9 * max(1.0, n):
                    col.add(f"grid.extent[{a}] = {L} is not a whole number of cells of size h = {g.h}")
                elif round(n) < 2 * g.shape_order + 2:
                    col.add(f"grid.extent[{a}] holds {round(n)} cells; need at least {2 * g.shape_order + 2}")
            if s.dt is not None and s.dt > 0 and s.c > 0:
                limit = g.h / (s.c * math.sqrt(3.0))
                if s.dt > limit * (1 + 1e-12):
                    col.add(f"dt = {s.dt} violates the stability bound dt ≤ h/(c√3) = {limit}")
        if g.boundary not in ("periodic", "absorbing"):
            col.add("grid.boundary must be periodic or absorbing")
        if g.shape_order not in (1, 2, 3):
            col.add("grid.shape_order must be 1, 2 or 3")
        if f.preset == "plane-wave" and f.wavenumber is not None and g.h > 0:
            periods = f.wavenumber * g.extent[0] / (2 * math.pi)
            if abs(periods - round(periods)) > 1e-9 * max(1.0, periods) or round(periods) < 1:
                col.add("field.wavenumber must fit a whole number of periods in grid.extent[0]")


def parse_scenario(text: str) -> Scenario:
    """Parse and validate a YAML scenario, raising :class:`ScenarioError` with all failures."""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError([f"not valid YAML: {exc}"]) from None
    if not isinstance(data, dict):
        raise ScenarioError(["scenario must be a mapping of keys to values"])
    col = _Collector()
    top = {f.name for f in fields(Scenario)}
    _unknown("", data.keys(), top, col)
    if "mode" not in data:
        col.add("mode is required")
    mode = data.get("mode", "")
    if not isinstance(mode, str):
        col.add("mode must be a string")
        mode = str(mode)

    kwargs = {"mode": mode}
    for name in ("dt", "c"):
        if name in data and data[name] is not None:
            val = _number(data[name], name, col)
            if val is not None:
                kwargs[name] = val
    for name in ("steps", "seed"):
        if name in data:
            val = _number(data[name], name, col, integer=True)
            if val is not None:
                kwargs[name] = val
    if "splitting" in data:
        kwargs["splitting"] = str(data["splitting"])
    for name, cls in _NESTED.items():
        if name in data:
            kwargs[name] = _build(cls, data[name], name, col)
    parts = data.get("particles", []) or []
    if not isinstance(parts, list):
        col.add("particles must be a list")
        parts = []
    kwargs["particles"] = tuple(_build(ParticleSpec, p, f"particles[{i}]", col) for i, p in enumerate(parts))

    s = Scenario(**kwargs)
    _validate(s, col)
    if col.errors:
        raise ScenarioError(col.errors)
    return s


def scenario_to_dict(s: Scenario) -> dict:
    def clean(obj):
        if isinstance(obj, tuple):
            return [clean(v) for v in obj]
        if isinstance(obj, dict):
            return {k: clean(v) for k, v in obj.items()}
        return obj

    return clean(dataclasses.asdict(s))


def print_scenario(s: Scenario) -> str:
    """YAML text that parses back to ``s``."""
    return yaml.safe_dump(scenario_to_dict(s), sort_keys=False)
