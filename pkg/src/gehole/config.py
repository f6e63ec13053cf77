"""Run configuration: a flat ``section.key = value`` text format.

Blank lines and ``#`` comments are ignored.  Absent keys take the defaults
of the corresponding dataclass; unknown keys are errors.  Tuples are
comma-separated and the convergence ladder is ``NxxNyxNz`` entries separated
by ``;``.
"""

import hashlib
import dataclasses
from dataclasses import dataclass, fields, replace

from .charge import DefectConfig
from .drive import MaskConfig
from .errors import ConfigError
from .hamiltonian import DotGeometry, FieldConfig, MaterialParams, basis_for


@dataclass(frozen=True)
class BasisSize:
    Nx: int = 12
    Ny: int = 6
    Nz: int = 10


@dataclass(frozen=True)
class DriveSettings:
    E1: float = 1e4  # V/m
    E2: float = 1e4  # V/m


@dataclass(frozen=True)
class HeatmapSettings:
    # frequency limits in units of omega0
    n_omega1: int = 60
    n_omega2: int = 60
    omega1_lo: float = 0.8
    omega1_hi: float = 1.2
    omega2_lo: float = 0.1
    omega2_hi: float = 3.5


@dataclass(frozen=True)
class R0Settings:
    E_gates: tuple = (5e6, 10e6)  # V/m
    n_omega2: int = 400
    omega2_lo: float = 0.1
    omega2_hi: float = 3.5


@dataclass(frozen=True)
class ResidualSettings:
    n_omega2: int = 400
    omega2_lo: float = 0.1
    omega2_hi: float = 3.5
    policy: str = "fixed"


@dataclass(frozen=True)
class CancelSettings:
    omega2_fraction: float = 0.0  # 0 selects the most negative R0 in the band
    n_omega2: int = 400
    omega2_lo: float = 0.1
    omega2_hi: float = 3.5
    practical_factor: float = 5.0


@dataclass(frozen=True)
class OracleSettings:
    omega_fraction: float = 0.5
    Omega_ladder_MHz: tuple = (64.0, 32.0, 16.0, 8.0)
    fidelity_Omega_MHz: float = 10.0
    fidelity_delta_MHz: float = 0.3
    duration_policy: str = "ideal"


@dataclass(frozen=True)
class ConvergenceSettings:
    ladder: tuple = ((10, 6, 8), (12, 6, 10))
    rtol: float = 1e-3


@dataclass(frozen=True)
class DefectSettings:
    enabled: bool = True
    position: tuple = ()  # empty: 30 nm lateral, 5 nm below the well
    charge_sign: int = 1
    screening_length: float = 5.0
    epsilon_r: float = 15.36
    allow_inside_well: bool = False


@dataclass(frozen=True)
class RunSettings:
    workers: int = 1
    out: str = "out"


SECTIONS = {
    "material": MaterialParams,
    "geometry": DotGeometry,
    "field": FieldConfig,
    "basis": BasisSize,
    "drive": DriveSettings,
    "mask": MaskConfig,
    "heatmap": HeatmapSettings,
    "r0": R0Settings,
    "residual": ResidualSettings,
    "cancel": CancelSettings,
    "oracle": OracleSettings,
    "convergence": ConvergenceSettings,
    "defect": DefectSettings,
    "run": RunSettings,
}


@dataclass(frozen=True)
class RunSpec:
    material: MaterialParams = dataclasses.field(default_factory=MaterialParams)
    geometry: DotGeometry = dataclasses.field(default_factory=DotGeometry)
    field: FieldConfig = dataclasses.field(default_factory=FieldConfig)
    basis: BasisSize = dataclasses.field(default_factory=BasisSize)
    drive: DriveSettings = dataclasses.field(default_factory=DriveSettings)
    mask: MaskConfig = dataclasses.field(default_factory=MaskConfig)
    heatmap: HeatmapSettings = dataclasses.field(default_factory=HeatmapSettings)
    r0: R0Settings = dataclasses.field(default_factory=R0Settings)
    residual: ResidualSettings = dataclasses.field(default_factory=ResidualSettings)
    cancel: CancelSettings = dataclasses.field(default_factory=CancelSettings)
    oracle: OracleSettings = dataclasses.field(default_factory=OracleSettings)
    convergence: ConvergenceSettings = dataclasses.field(default_factory=ConvergenceSettings)
    defect: DefectSettings = dataclasses.field(default_factory=DefectSettings)
    run: RunSettings = dataclasses.field(default_factory=RunSettings)

    def basis_spec(self, geometry=None):
        b = self.basis
        return basis_for(geometry or self.geometry, b.Nx, b.Ny, b.Nz)

    def defect_config(self):
        d = self.defect
        if not d.enabled:
            return None
        pos = d.position or (30.0, 0.0, -self.geometry.L / 2 - 5.0)
        return DefectConfig(pos, d.charge_sign, d.screening_length, d.epsilon_r, d.allow_inside_well)

    @property
    def defect_is_default(self):
        return self.defect == DefectSettings()

    @property
    def hash(self):
        return spec_hash(self)


# -- value conversion ---------------------------------------------------------


def _parse_bool(text):
    low = text.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_ladder(text):
    rungs = []
    for part in text.split(";"):
        part = part.strip()
        if part:
            dims = tuple(int(v) for v in part.lower().split("x"))
            if len(dims) != 3:
                raise ValueError(f"ladder entry {part!r} is not NxxNyxNz")
            rungs.append(dims)
    return tuple(rungs)


def _parse_value(section, name, default, text):
    if section == "convergence" and name == "ladder":
        return _parse_ladder(text)
    if isinstance(default, bool):
        return _parse_bool(text)
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    if isinstance(default, tuple):
        items = [v.strip() for v in text.split(",") if v.strip()]
        kind = int if default and all(isinstance(v, int) for v in default) else float
        return tuple(kind(v) for v in items)
    return text.strip()


def _format_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        if value and isinstance(value[0], tuple):
            return "; ".join("x".join(str(v) for v in rung) for rung in value)
        return ", ".join(_format_value(v) for v in value)
    return str(value)


# -- load / serialize -----------------------------------------------------------


def parse_config(text, source="<string>"):
    values = {name: {} for name in SECTIONS}
    defaults = {name: {f.name: f for f in fields(cls)} for name, cls in SECTIONS.items()}
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'section.key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key.count(".") != 1:
            raise ConfigError(f"{source}:{lineno}: key {key!r} must have the form section.key")
        section, name = key.split(".")
        if section not in SECTIONS:
            raise ConfigError(f"{source}:{lineno}: unknown section {section!r}")
        if name not in defaults[section]:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r} (first set on line {seen[key]})")
        seen[key] = lineno
        f = defaults[section][name]
        try:
            values[section][name] = _parse_value(section, name, f.default, value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {exc}") from exc
    return _build(values, seen, source)


def _build(values, seen, source):
    parts = {}
    for section, cls in SECTIONS.items():
        try:
            parts[section] = cls(**values[section])
        except (TypeError, ValueError) as exc:
            where = ", ".join(f"line {seen[f'{section}.{k}']}" for k in values[section])
            raise ConfigError(f"{source}: invalid [{section}] ({where or 'defaults'}): {exc}") from exc
    spec = RunSpec(**parts)
    _validate(spec)
    return spec


def _validate(spec):
    try:
        spec.basis_spec()
    except ValueError as exc:
        raise ConfigError(f"basis: {exc}") from exc
    for name in ("n_omega1", "n_omega2"):
        if getattr(spec.heatmap, name) < 2:
            raise ConfigError(f"heatmap.{name} must be at least 2")
    for sec in ("heatmap", "r0", "residual", "cancel"):
        s = getattr(spec, sec)
        if not 0 < s.omega2_lo < s.omega2_hi:
            raise ConfigError(f"{sec}.omega2_lo/omega2_hi must satisfy 0 < lo < hi")
    if not 0 < spec.heatmap.omega1_lo < spec.heatmap.omega1_hi:
        raise ConfigError("heatmap.omega1_lo/omega1_hi must satisfy 0 < lo < hi")
    if spec.residual.policy not in ("fixed", "cancel"):
        raise ConfigError(f"residual.policy must be 'fixed' or 'cancel', got {spec.residual.policy!r}")
    if spec.oracle.duration_policy not in ("ideal", "generalized"):
        raise ConfigError("oracle.duration_policy must be 'ideal' or 'generalized'")
    if spec.drive.E1 < 0 or spec.drive.E2 < 0:
        raise ConfigError("drive amplitudes must be non-negative")
    if spec.run.workers < 1:
        raise ConfigError("run.workers must be at least 1")
    if not spec.convergence.ladder:
        raise ConfigError("convergence.ladder must not be empty")
    if spec.defect.position and len(spec.defect.position) != 3:
        raise ConfigError("defect.position must have three components")
    try:
        d = spec.defect_config()
        if d is not None:
            d.check_outside(spec.geometry.L)
    except ValueError as exc:
        raise ConfigError(f"defect: {exc}") from exc


def load_config(path=None):
    """RunSpec from a config file; ``None`` gives the defaults."""
    if path is None:
        return RunSpec()
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, str(path))


def serialize(spec, include_run=True):
    lines = []
    for section in SECTIONS:
        if section == "run" and not include_run:
            continue
        obj = getattr(spec, section)
        for f in fields(obj):
            lines.append(f"{section}.{f.name} = {_format_value(getattr(obj, f.name))}")
    return "\n".join(lines) + "\n"


def spec_hash(spec):
    """Content hash of everything that affects numbers (run settings excluded)."""
    return hashlib.sha256(serialize(spec, include_run=False).encode()).hexdigest()[:16]


def with_overrides(spec, **run):
    return replace(spec, run=replace(spec.run, **{k: v for k, v in run.items() if v is not None}))
