"""INI run configuration.

Example::

    [case]
    name = couette        ; ringleb | couette | freestream | wedge
    mesh = square         ; optional built-in family or mesh file path
    level = 2
    levels = 1, 2, 3      ; convergence studies
    k = 2
    scheme = hllem

    [gas]
    reynolds = 1

    [boundary]            ; optional; overrides the case defaults
    bottom = dirichlet

    [time]
    dt = inf
    max_steps = 3

    [shock]
    mode = off

    [output]
    directory = out

Boundary values are ``farfield``, ``dirichlet``, ``inviscid``, ``adiabatic``,
``isothermal:<T>`` and ``outflow:<p>``; far-field and Dirichlet data come
from the case exact solution, or from its uniform initial state.
"""

from configparser import ConfigParser, Error as ConfigParserError
from dataclasses import dataclass, field, replace
import inspect
from pathlib import Path
import re

from .boundary import AdiabaticWall, Dirichlet, FarField, InviscidWall, IsothermalWall, PressureOutflow
from .cases import BUILTIN_MESHES, CASES, get_case
from .errors import ConfigError, MissingSpec
from .mesh import read_mesh
from .newton import MarchConfig
from .riemann import parse_scheme
from .shock import SensorConfig

GAS_KEYS = {"gamma": "gamma", "mach": "mach", "reynolds": "reynolds", "alpha": "alpha_deg",
            "angle": "angle_deg"}
TIME_KEYS = {"dt": float, "growth": float, "dt_max": float, "max_steps": int,
             "newton_rtol": float, "newton_atol": float, "max_newton": int,
             "newton_stol": float, "damping_halvings": int, "steady_tol": float,
             "steady_drop": float, "on_nonphysical": str}
SHOCK_KEYS = {"mode": str, "eps0": float, "eps0_multiplier": float, "s0": float,
              "smin": float, "smax": float, "pr_beta": float, "relax": float,
              "allow_mixed": bool}
SECTIONS = {"case", "gas", "boundary", "time", "shock", "output"}


@dataclass
class RunConfig:
    """Parsed run configuration; build objects with :meth:`case_object` and friends."""

    case: str
    case_params: dict = field(default_factory=dict)
    mesh: str = None
    level: int = 1
    levels: tuple = (1, 2, 3)
    k: int = 1
    k_list: tuple = ()
    scheme: str = "hll"
    schemes: tuple = ()
    boundary: dict = field(default_factory=dict)
    time: dict = field(default_factory=dict)
    shock: SensorConfig = field(default_factory=SensorConfig)
    output_dir: str = "."
    field_file: str = "field.dat"
    history_file: str = "history.csv"
    convergence_file: str = "convergence.csv"
    rate_slack: float = 0.2
    source: str = "<config>"

    def case_object(self):
        return get_case(self.case, **self.case_params)

    def build_mesh(self, level=None):
        """Mesh at ``level``: the case default, a built-in family or a mesh file."""
        level = self.level if level is None else level
        if self.mesh is None:
            return self.case_object().mesh(level)
        if self.mesh in BUILTIN_MESHES:
            return BUILTIN_MESHES[self.mesh](level)
        return read_mesh(self.mesh)

    def march(self, case):
        return replace(case.march, **self.time)

    def bindings(self, case, mesh):
        """Boundary bindings: case defaults overridden by the ``[boundary]`` block."""
        out = dict(case.bindings(mesh))
        tags = set(mesh.tag_names)
        for tag, (spec, lineno) in self.boundary.items():
            if tag not in tags:
                raise MissingSpec(f"{self.source}:{lineno}: boundary tag {tag!r} not in mesh "
                                  f"(tags: {', '.join(sorted(tags))})")
            out[tag] = _make_condition(spec, case, f"{self.source}:{lineno}")
        return out


def _make_condition(spec, case, where):
    name, _, arg = spec.partition(":")
    name = name.strip().lower()
    data = case.exact if case.exact is not None else case.initial
    try:
        if name in ("farfield", "dirichlet"):
            if data is None:
                raise ConfigError(f"{where}: case {case.name!r} has no state for {name}")
            return FarField(data) if name == "farfield" else Dirichlet(data)
        if name in ("inviscid", "slip", "symmetry"):
            return InviscidWall()
        if name == "adiabatic":
            return AdiabaticWall()
        if name == "isothermal":
            return IsothermalWall(float(arg))
        if name == "outflow":
            return PressureOutflow(float(arg))
    except ValueError:
        raise ConfigError(f"{where}: invalid boundary argument {arg!r}") from None
    raise ConfigError(f"{where}: unknown boundary condition {spec!r}")


def _line_index(text):
    """``{(section, key): line}`` for locating values in error messages."""
    index, section = {}, None
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        m = re.match(r"\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip().lower()
            index[(section, None)] = n
        elif section and line and line[0] not in "#;":
            key = re.split(r"[=:]", line, maxsplit=1)[0].strip().lower()
            index.setdefault((section, key), n)
    return index


def _convert(value, kind, where, key):
    try:
        if kind is bool:
            v = value.strip().lower()
            if v not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
                raise ValueError
            return v in ("1", "true", "yes", "on")
        if kind is int:
            return int(value)
        if kind is float:
            return float(value)
        return value.strip()
    except ValueError:
        raise ConfigError(f"{where}: invalid value {value!r} for {key!r}") from None


def _int_list(value, where, key):
    try:
        return tuple(int(v) for v in re.split(r"[,\s]+", value.strip()) if v)
    except ValueError:
        raise ConfigError(f"{where}: invalid integer list {value!r} for {key!r}") from None


def parse_config(text, source="<config>"):
    """Parse INI text into a :class:`RunConfig`; errors carry ``source:line``."""
    cp = ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str.lower
    try:
        cp.read_string(text, source=source)
    except ConfigParserError as exc:
        raise ConfigError(str(exc)) from None
    lines = _line_index(text)
    at = lambda sec, key=None: f"{source}:{lines.get((sec, key), lines.get((sec, None), 0))}"

    for sec in cp.sections():
        if sec.lower() not in SECTIONS:
            raise ConfigError(f"{at(sec.lower())}: unknown section [{sec}]")
    if not cp.has_section("case") or not cp.has_option("case", "name"):
        raise ConfigError(f"{source}: missing [case] name")
    c = cp["case"]
    name = c["name"].strip()
    if name not in CASES:
        raise ConfigError(f"{at('case', 'name')}: unknown case {name!r}; expected one of {sorted(CASES)}")
    cfg = RunConfig(case=name, source=source)
    known_case = {"name", "mesh", "level", "levels", "k", "k_list", "k_override", "scheme",
                  "schemes", "rate_slack"}
    for key in c:
        if key not in known_case:
            raise ConfigError(f"{at('case', key)}: unknown key {key!r} in [case]")
    if "mesh" in c:
        cfg.mesh = c["mesh"].strip()
    cfg.level = _convert(c.get("level", "1"), int, at("case", "level"), "level")
    if "levels" in c:
        cfg.levels = _int_list(c["levels"], at("case", "levels"), "levels")
    cfg.k = _convert(c.get("k", "1"), int, at("case", "k"), "k")
    if cfg.k < 1:
        raise ConfigError(f"{at('case', 'k')}: k must be at least 1")
    if "k_list" in c:
        cfg.k_list = _int_list(c["k_list"], at("case", "k_list"), "k_list")
        if not cfg.k_list or min(cfg.k_list) < 1:
            raise ConfigError(f"{at('case', 'k_list')}: degrees must be at least 1")
    if "k_override" in c:
        over = _int_list(c["k_override"], at("case", "k_override"), "k_override")
        if any(v != cfg.k for v in over):
            raise ConfigError(f"{at('case', 'k_override')}: per-element degree overrides "
                              f"must equal k (variable degree is not supported)")
    for key in ("scheme",):
        if key in c:
            cfg.scheme = c[key].strip()
    if "schemes" in c:
        cfg.schemes = tuple(s.strip() for s in c["schemes"].split(",") if s.strip())
    for s in (cfg.scheme,) + cfg.schemes:
        try:
            parse_scheme(s)
        except ValueError as exc:
            raise ConfigError(f"{at('case', 'scheme' if s == cfg.scheme else 'schemes')}: {exc}") from None
    if "rate_slack" in c:
        cfg.rate_slack = _convert(c["rate_slack"], float, at("case", "rate_slack"), "rate_slack")

    accepted = set(inspect.signature(CASES[name]).parameters)
    if cp.has_section("gas"):
        for key, value in cp["gas"].items():
            param = GAS_KEYS.get(key)
            if param is None or param not in accepted:
                raise ConfigError(f"{at('gas', key)}: case {name!r} does not take gas key {key!r}")
            cfg.case_params[param] = _convert(value, float, at("gas", key), key)

    if cp.has_section("boundary"):
        for tag, value in cp["boundary"].items():
            cfg.boundary[tag] = (value.strip(), lines.get(("boundary", tag), 0))

    if cp.has_section("time"):
        for key, value in cp["time"].items():
            if key not in TIME_KEYS:
                raise ConfigError(f"{at('time', key)}: unknown key {key!r} in [time]")
            cfg.time[key] = _convert(value, TIME_KEYS[key], at("time", key), key)
        try:
            MarchConfig(**cfg.time)
        except ValueError as exc:
            raise ConfigError(f"{at('time')}: {exc}") from None

    if cp.has_section("shock"):
        opts = {}
        for key, value in cp["shock"].items():
            if key == "delta_window":
                pair = [v for v in re.split(r"[,\s]+", value.strip()) if v]
                try:
                    opts["window_high"], opts["window_low"] = (float(v) for v in pair)
                except ValueError:
                    raise ConfigError(f"{at('shock', key)}: delta_window needs two numbers "
                                      f"'high, low'") from None
                continue
            if key not in SHOCK_KEYS:
                raise ConfigError(f"{at('shock', key)}: unknown key {key!r} in [shock]")
            opts["s0_bulk" if key == "s0" else key] = _convert(value, SHOCK_KEYS[key], at("shock", key), key)
        cfg.shock = SensorConfig(**opts)

    if cp.has_section("output"):
        o = cp["output"]
        for key in o:
            if key not in ("directory", "field", "history", "convergence"):
                raise ConfigError(f"{at('output', key)}: unknown key {key!r} in [output]")
        cfg.output_dir = o.get("directory", cfg.output_dir).strip()
        cfg.field_file = o.get("field", cfg.field_file).strip()
        cfg.history_file = o.get("history", cfg.history_file).strip()
        cfg.convergence_file = o.get("convergence", cfg.convergence_file).strip()
    return cfg


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    cfg = parse_config(text, source=str(path))
    if cfg.mesh is not None and cfg.mesh not in BUILTIN_MESHES:
        mesh = Path(cfg.mesh) if Path(cfg.mesh).is_absolute() else path.parent / cfg.mesh
        if not mesh.is_file():
            raise ConfigError(f"{path}: mesh {cfg.mesh!r} is neither built in nor a file")
        cfg.mesh = str(mesh)
    if not Path(cfg.output_dir).is_absolute():
        cfg.output_dir = str(path.parent / cfg.output_dir)
    return cfg
