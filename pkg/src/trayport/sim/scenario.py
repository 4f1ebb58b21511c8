"""Scenario definition, validation, and the YAML file format.

A scenario file is one YAML document:

    scenario:
      farm:                     # inline farm (same schema as a farm file)
        modules:
          - {n_h: 1, n_v: 2}
      # or: farm_file: path/to/farm.yaml
      placement:
        - {carriage: c00, at: [0, 0, 0]}        # module, col, row
        - {carriage: c01, at: [0, 0, 1], tray_mass: 4.0}
      goal: unload_all          # unload_all | load_all
      # or: goal: {move_one: {carriage: c00, to: [0, 0, 1]}}
      timings:                  # optional; rational strings keep runs exact
        t_h: "12.5"             # seconds per horizontal unit move
        t_v: "5000/333"         # seconds per vertical unit move
        t_engage: "0"           # latch duration when picking a carriage up
      modules_mode: parallel    # parallel | serial

Omitted timings derive from the farm's pitches and speeds. For load_all the
``at`` cells are the targets; carriages start queued at the exit conveyor
in listed order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Union

import yaml

from trayport.farm import (
    CellAddress,
    FarmSpec,
    farm_from_dict,
    load_farm,
    validate_farm,
)


class ScenarioError(ValueError):
    """The scenario is internally inconsistent or its goal is unreachable."""


@dataclass(frozen=True)
class Placement:
    carriage_id: str
    module: int
    col: int
    row: int
    tray_mass: float = 0.0


@dataclass(frozen=True)
class UnloadAll:
    pass


@dataclass(frozen=True)
class LoadAll:
    pass


@dataclass(frozen=True)
class MoveOne:
    carriage_id: str
    dest: CellAddress


Goal = Union[UnloadAll, LoadAll, MoveOne]


def parse_rational(value) -> Fraction:
    """Exact parse: ints, 'a/b' strings, and decimal strings stay rational."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        # Go through the decimal literal so 12.5 means 25/2, not the binary
        # float expansion.
        return Fraction(repr(value))
    return Fraction(str(value))


@dataclass(frozen=True)
class Scenario:
    farm: FarmSpec
    placement: tuple[Placement, ...]
    goal: Goal = field(default_factory=UnloadAll)
    t_h: Optional[Fraction] = None
    t_v: Optional[Fraction] = None
    t_engage: Fraction = Fraction(0)
    modules_mode: str = "parallel"

    def __post_init__(self):
        if self.modules_mode not in ("parallel", "serial"):
            raise ScenarioError(f"modules_mode must be parallel|serial")
        self.validate()

    def validate(self) -> None:
        problems = validate_farm(self.farm)
        if not problems.ok:
            raise ScenarioError(f"invalid farm: {problems.violations[0]}")
        seen_cells: dict[tuple, str] = {}
        seen_ids: set[str] = set()
        for p in self.placement:
            if p.carriage_id in seen_ids:
                raise ScenarioError(f"duplicate carriage id {p.carriage_id!r}")
            seen_ids.add(p.carriage_id)
            CellAddress(p.module, p.col, p.row).validate(self.farm)
            key = (p.module, p.col, p.row)
            if key in seen_cells:
                raise ScenarioError(
                    f"carriages {seen_cells[key]!r} and {p.carriage_id!r} "
                    f"share cell {key}"
                )
            seen_cells[key] = p.carriage_id
            spec = self.farm.module(p.module)
            if p.tray_mass > spec.payload_max:
                raise ScenarioError(
                    f"carriage {p.carriage_id!r} mass {p.tray_mass} exceeds "
                    f"module payload {spec.payload_max} kg"
                )
        if isinstance(self.goal, MoveOne):
            if self.goal.carriage_id not in seen_ids:
                raise ScenarioError(
                    f"move_one names unknown carriage {self.goal.carriage_id!r}"
                )
            dest = self.goal.dest.validate(self.farm)
            src = next(
                p for p in self.placement if p.carriage_id == self.goal.carriage_id
            )
            if src.module != dest.module:
                raise ScenarioError("move_one cannot cross modules in v1")
            key = (dest.module, dest.col, dest.row)
            blocker = seen_cells.get(key)
            if blocker is not None and blocker != self.goal.carriage_id:
                raise ScenarioError(
                    f"destination {key} blocked by carriage {blocker!r}"
                )

    def module_timings(self, module_index: int):
        """Effective (t_h, t_v, speed_h, speed_v) for one module, exact."""
        spec = self.farm.module(module_index)
        pitch_h = Fraction(str(spec.pitch_h))
        pitch_v = Fraction(str(spec.pitch_v))
        t_h = self.t_h if self.t_h is not None else pitch_h / Fraction(
            str(spec.mover_speed)
        )
        t_v = self.t_v if self.t_v is not None else pitch_v / Fraction(
            str(spec.lift_speed)
        )
        if not (t_h > 0 and t_v > 0):
            raise ScenarioError("unit move times must be > 0")
        return t_h, t_v, pitch_h / t_h, pitch_v / t_v


def scenario_from_dict(data: dict, base_dir: Path | None = None) -> Scenario:
    try:
        body = data["scenario"]
    except (KeyError, TypeError) as exc:
        raise ScenarioError("scenario file needs a top-level 'scenario' map") from exc

    if "farm_file" in body:
        path = Path(body["farm_file"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        farm = load_farm(path)
    elif "farm" in body:
        farm = farm_from_dict({"farm": body["farm"]})
    else:
        raise ScenarioError("scenario needs 'farm' or 'farm_file'")

    placement = []
    for raw in body.get("placement", []):
        module, col, row = raw["at"]
        placement.append(
            Placement(
                carriage_id=str(raw["carriage"]),
                module=int(module),
                col=int(col),
                row=int(row),
                tray_mass=float(raw.get("tray_mass", 0.0)),
            )
        )

    raw_goal = body.get("goal", "unload_all")
    if raw_goal == "unload_all":
        goal: Goal = UnloadAll()
    elif raw_goal == "load_all":
        goal = LoadAll()
    elif isinstance(raw_goal, dict) and "move_one" in raw_goal:
        spec = raw_goal["move_one"]
        module, col, row = spec["to"]
        goal = MoveOne(
            carriage_id=str(spec["carriage"]),
            dest=CellAddress(int(module), int(col), int(row)),
        )
    else:
        raise ScenarioError(f"unknown goal {raw_goal!r}")

    timings = body.get("timings", {}) or {}
    unknown = set(timings) - {"t_h", "t_v", "t_engage"}
    if unknown:
        raise ScenarioError(f"unknown timing keys {sorted(unknown)}")

    return Scenario(
        farm=farm,
        placement=tuple(placement),
        goal=goal,
        t_h=parse_rational(timings["t_h"]) if "t_h" in timings else None,
        t_v=parse_rational(timings["t_v"]) if "t_v" in timings else None,
        t_engage=parse_rational(timings.get("t_engage", 0)),
        modules_mode=body.get("modules_mode", "parallel"),
    )


def load_scenario(path) -> Scenario:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    return scenario_from_dict(data, base_dir=path.parent)
