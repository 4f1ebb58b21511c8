"""Static data model of a modular tray-transport farm.

A farm is an ordered list of modules. Each module is an n_h x n_v grid of
grow units served by one mover rail per shelf row and one elevator. All
geometry is in millimetres, speeds in mm/s, masses in kg.

Coordinate conventions:
  * Grid coordinates: cell (col, row) sits at (col * pitch_h, row * pitch_v),
    origin at the first cell. This is what :func:`cell_position` returns.
  * Agent rail coordinates place the elevator dock one pitch_h before col 0
    and the carriage exit level one pitch_v below row 0; see
    ``trayport.agents.world``.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Union

import yaml

# Soft validation limits for the reference build. Overridable per farm file
# because the profile lengths and tray clamps are adjustable.
DEFAULT_LIMITS = {
    "payload_max_kg": 12.5,
    "tray_w_mm": 1060.0,
    "tray_d_mm": 630.0,
    "min_aisle_gap_mm": 1000.0,
}

# Per-unit grid pitches are configuration, not constants: the published
# footprint only pins the overall 2x1 envelope. These defaults give
# 12.5 s / ~15 s per-unit travel times at the rated speeds.
DEFAULT_PITCH_H = 1250.0
DEFAULT_PITCH_V = 500.0
DEFAULT_MOVER_SPEED = 100.0
DEFAULT_LIFT_SPEED = 33.3

# The implied grow area per unit is ambiguous in the source material
# (total-area, cost-ratio and tray-area readings disagree); expose all
# three as presets and default to the total-area reading.
AREA_PER_UNIT_PRESETS = {
    "total_area": 0.2175,   # 217.5 m^2 over 1000 grow units
    "cost_ratio": 1.125,    # 144.96 USD / 128.85 USD per m^2
    "tray_area": 0.6678,    # 1060 mm x 630 mm tray footprint
}
DEFAULT_AREA_PER_UNIT = AREA_PER_UNIT_PRESETS["total_area"]


class AddressError(ValueError):
    """A cell address is outside its module's grid."""


class ParameterError(ValueError):
    """A kinematic or geometric parameter is out of domain."""


@dataclass(frozen=True)
class ModuleSpec:
    """Geometry, capacity and kinematics of one module."""

    n_h: int
    n_v: int
    pitch_h: float = DEFAULT_PITCH_H
    pitch_v: float = DEFAULT_PITCH_V
    mover_speed: float = DEFAULT_MOVER_SPEED
    lift_speed: float = DEFAULT_LIFT_SPEED
    tray_w: float = 1060.0
    tray_d: float = 630.0
    payload_max: float = 12.5
    aisle_gap: float = 1000.0

    @property
    def capacity(self) -> int:
        return self.n_h * self.n_v

    @property
    def shelf_length(self) -> float:
        """Rail length from the elevator dock to the last cell."""
        return self.n_h * self.pitch_h


@dataclass(frozen=True)
class FarmSpec:
    """An ordered collection of modules."""

    modules: tuple[ModuleSpec, ...]

    def __post_init__(self):
        if not isinstance(self.modules, tuple):
            object.__setattr__(self, "modules", tuple(self.modules))
        if self.n < 1:
            raise ParameterError("a farm needs at least one module")

    @property
    def n(self) -> int:
        return len(self.modules)

    @property
    def capacity(self) -> int:
        return sum(m.capacity for m in self.modules)

    def module(self, index: int) -> ModuleSpec:
        if not 0 <= index < self.n:
            raise AddressError(f"module index {index} out of range 0..{self.n - 1}")
        return self.modules[index]


@dataclass(frozen=True, order=True)
class CellAddress:
    """Address of one grow unit: (module, col, row), all 0-based."""

    module: int
    col: int
    row: int

    def validate(self, farm: FarmSpec) -> "CellAddress":
        spec = farm.module(self.module)
        if not 0 <= self.col < spec.n_h:
            raise AddressError(f"col {self.col} out of range 0..{spec.n_h - 1}")
        if not 0 <= self.row < spec.n_v:
            raise AddressError(f"row {self.row} out of range 0..{spec.n_v - 1}")
        return self


# A carriage is always in exactly one place: a cell, riding an elevator,
# or latched to a mover.
@dataclass(frozen=True)
class Cell:
    address: CellAddress


@dataclass(frozen=True)
class OnElevator:
    module: int


@dataclass(frozen=True)
class OnMover:
    mover_id: str


CarriageLocation = Union[Cell, OnElevator, OnMover]


@dataclass(frozen=True)
class Carriage:
    """A passively wheeled frame permanently holding one tray."""

    id: str
    tray_mass: float = 0.0
    location: CarriageLocation | None = None


@dataclass(frozen=True)
class Violation:
    """One broken invariant: which rule, the limit, and the offending value."""

    rule: str
    limit: object
    value: object

    def __str__(self) -> str:
        return f"{self.rule} (limit {self.limit}, got {self.value})"


@dataclass(frozen=True)
class ValidationResult:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_module_spec(
    spec: ModuleSpec,
    farm_size: int = 1,
    limits: dict | None = None,
) -> ValidationResult:
    """Check a module spec against the structural and build limits.

    Violations are returned as data, never raised: invalid user input is an
    expected case. ``farm_size`` matters because the aisle-gap rule only
    binds when modules are packed next to each other.
    """
    lim = dict(DEFAULT_LIMITS)
    if limits:
        lim.update(limits)
    bad: list[Violation] = []

    if spec.n_h < 1:
        bad.append(Violation("n_h >= 1", 1, spec.n_h))
    if spec.n_v < 1:
        bad.append(Violation("n_v >= 1", 1, spec.n_v))
    for name in ("pitch_h", "pitch_v", "mover_speed", "lift_speed"):
        value = getattr(spec, name)
        if not value > 0:
            bad.append(Violation(f"{name} > 0", 0, value))
    if spec.tray_w > lim["tray_w_mm"]:
        bad.append(Violation("tray_w <= limit", lim["tray_w_mm"], spec.tray_w))
    if spec.tray_d > lim["tray_d_mm"]:
        bad.append(Violation("tray_d <= limit", lim["tray_d_mm"], spec.tray_d))
    if spec.payload_max > lim["payload_max_kg"]:
        bad.append(
            Violation("payload_max <= limit", lim["payload_max_kg"], spec.payload_max)
        )
    if farm_size > 1 and spec.aisle_gap < lim["min_aisle_gap_mm"]:
        bad.append(
            Violation("aisle_gap >= 1000 mm", lim["min_aisle_gap_mm"], spec.aisle_gap)
        )
    return ValidationResult(tuple(bad))


def validate_farm(farm: FarmSpec, limits: dict | None = None) -> ValidationResult:
    """Validate every module of a farm; violations are prefixed per module."""
    bad: list[Violation] = []
    for i, spec in enumerate(farm.modules):
        result = validate_module_spec(spec, farm_size=farm.n, limits=limits)
        for v in result.violations:
            bad.append(Violation(f"module[{i}]: {v.rule}", v.limit, v.value))
    return ValidationResult(tuple(bad))


def cell_position(spec: ModuleSpec, addr: CellAddress) -> tuple[float, float]:
    """Grid position (x, z) in mm of a cell, origin at cell (0, 0)."""
    if not 0 <= addr.col < spec.n_h:
        raise AddressError(f"col {addr.col} out of range 0..{spec.n_h - 1}")
    if not 0 <= addr.row < spec.n_v:
        raise AddressError(f"row {addr.row} out of range 0..{spec.n_v - 1}")
    return (addr.col * spec.pitch_h, addr.row * spec.pitch_v)


def travel_time(distance, speed):
    """Seconds to cover ``distance`` mm at constant ``speed`` mm/s.

    Works for floats and Fractions alike; acceleration is deliberately
    ignored, only cruise speeds are modelled.
    """
    if not speed > 0:
        raise ParameterError(f"speed must be > 0, got {speed}")
    if distance < 0:
        raise ParameterError(f"distance must be >= 0, got {distance}")
    return distance / speed


def grow_area(farm: FarmSpec, area_per_unit: float = DEFAULT_AREA_PER_UNIT) -> float:
    """Total grow area in m^2: grow-unit count times area per unit."""
    if not area_per_unit > 0:
        raise ParameterError(f"area_per_unit must be > 0, got {area_per_unit}")
    return farm.capacity * area_per_unit


def unit_times(spec: ModuleSpec) -> tuple[Fraction, Fraction]:
    """Exact per-unit move times (t_h, t_v) derived from pitches and speeds."""
    t_h = Fraction(str(spec.pitch_h)) / Fraction(str(spec.mover_speed))
    t_v = Fraction(str(spec.pitch_v)) / Fraction(str(spec.lift_speed))
    return t_h, t_v


# ---------------------------------------------------------------------------
# Farm file format: one human-editable YAML document.
#
#   farm:
#     modules:
#       - n_h: 10
#         n_v: 10
#         pitch_h: 1250.0
#         ...                 # omitted keys take the defaults above
#
# Round-trip guarantee: load(save(farm)) == farm.
# ---------------------------------------------------------------------------

_MODULE_FIELDS = (
    "n_h", "n_v", "pitch_h", "pitch_v", "mover_speed", "lift_speed",
    "tray_w", "tray_d", "payload_max", "aisle_gap",
)


def farm_to_dict(farm: FarmSpec) -> dict:
    return {
        "farm": {
            "modules": [
                {name: getattr(m, name) for name in _MODULE_FIELDS}
                for m in farm.modules
            ]
        }
    }


def farm_from_dict(data: dict) -> FarmSpec:
    try:
        raw_modules = data["farm"]["modules"]
    except (KeyError, TypeError) as exc:
        raise ParameterError("farm file needs a farm.modules list") from exc
    if not raw_modules:
        raise ParameterError("farm file lists no modules")
    modules = []
    for i, raw in enumerate(raw_modules):
        unknown = set(raw) - set(_MODULE_FIELDS)
        if unknown:
            raise ParameterError(f"module[{i}]: unknown keys {sorted(unknown)}")
        modules.append(ModuleSpec(**raw))
    return FarmSpec(tuple(modules))


def save_farm(farm: FarmSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(farm_to_dict(farm), fh, sort_keys=False)


def load_farm(path) -> FarmSpec:
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    return farm_from_dict(data)


def dumps_farm(farm: FarmSpec) -> str:
    buf = io.StringIO()
    yaml.safe_dump(farm_to_dict(farm), buf, sort_keys=False)
    return buf.getvalue()


def loads_farm(text: str) -> FarmSpec:
    return farm_from_dict(yaml.safe_load(text))


def minimal_build() -> ModuleSpec:
    """The 1x2 reference build: one column, two shelf rows."""
    return ModuleSpec(n_h=1, n_v=2)


def with_modules(spec: ModuleSpec, count: int) -> FarmSpec:
    """A farm of ``count`` identical modules."""
    return FarmSpec(tuple(replace(spec) for _ in range(count)))
