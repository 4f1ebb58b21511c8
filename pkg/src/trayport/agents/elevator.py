"""Elevator state machine: the winch-driven platform linking shelf rows.

The platform serves ``n_rows`` levels spaced one pitch apart, heights in
[0, (n_rows - 1) * pitch]. A module world maps its shelf rows onto levels
1..n_v and keeps level 0 as the carriage exit. Localisation is a single
reflective IR sensor that triggers inside a small band around exact
alignment; motion within that band is the ``aligning`` phase.

Safety interlock: with a carriage-bearing occupant aboard, vertical motion
is refused unless the carriage lock is engaged. The lock can only change
while parked at a row.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from trayport.agents.errors import (
    BoundsError,
    BusyError,
    CalibrationError,
    CommandError,
    InterlockError,
)


class ElevatorMachine(str, Enum):
    AT_ROW = "at_row"
    MOVING = "moving"
    ALIGNING = "aligning"


@dataclass(frozen=True)
class ElevatorState:
    """Snapshot of an elevator."""

    machine: ElevatorMachine
    height: float
    target_row: int
    lock_engaged: bool
    ir_triggered: bool
    occupant: tuple[str, str | None] | None  # (mover_id, carriage_id)


@dataclass(frozen=True)
class IrCalibration:
    """Sensor mount offset and trigger band half-width, both in mm."""

    offset: float
    tolerance: float

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be > 0")


DEFAULT_IR_TOLERANCE = 3.0  # mm; the shim used by the alignment check


class ElevatorFsm:
    """Mutable elevator with kinematics; emits (kind, detail) events."""

    def __init__(
        self,
        elevator_id: str,
        n_rows: int,
        pitch,
        speed,
        tolerance=DEFAULT_IR_TOLERANCE,
        world=None,
    ):
        if n_rows < 1:
            raise ValueError("n_rows must be >= 1")
        if not speed > 0:
            raise ValueError("speed must be > 0")
        if not tolerance > 0:
            raise ValueError("tolerance must be > 0")
        self.elevator_id = elevator_id
        self.n_rows = n_rows
        self.pitch = pitch
        self.speed = speed
        self.tolerance = tolerance
        self.world = world

        self.machine = ElevatorMachine.AT_ROW
        self.height = 0 * pitch
        self.target_row = 0
        self.lock_engaged = False
        self.occupant: tuple[str, str | None] | None = None
        self.events: list[tuple[str, dict]] = []

    # -- state access -------------------------------------------------------

    @property
    def max_height(self):
        return (self.n_rows - 1) * self.pitch

    @property
    def ir_triggered(self) -> bool:
        return abs(self.height - self.target_row * self.pitch) <= self.tolerance

    @property
    def state(self) -> ElevatorState:
        return ElevatorState(
            machine=self.machine,
            height=self.height,
            target_row=self.target_row,
            lock_engaged=self.lock_engaged,
            ir_triggered=self.ir_triggered,
            occupant=self.occupant,
        )

    @property
    def busy(self) -> bool:
        return self.machine != ElevatorMachine.AT_ROW

    @property
    def current_row(self) -> int | None:
        """Row the platform is parked at, None while moving."""
        if self.machine == ElevatorMachine.AT_ROW:
            return self.target_row
        return None

    def next_event_dt(self):
        """Time to the next state transition (band entry or arrival)."""
        if self.machine == ElevatorMachine.AT_ROW:
            return None
        remaining = abs(self.target_row * self.pitch - self.height)
        if remaining > self.tolerance:
            return (remaining - self.tolerance) / self.speed
        return remaining / self.speed

    def _emit(self, kind: str, **detail):
        self.events.append((kind, detail))

    def drain_events(self) -> list[tuple[str, dict]]:
        out, self.events = self.events, []
        return out

    # -- commands -------------------------------------------------------------

    def command(self, name: str, args: dict | None = None) -> None:
        args = args or {}
        if name == "goto_row":
            self.begin_goto_row(int(args["row"]))
        elif name == "lock":
            self.set_lock(True)
        elif name == "unlock":
            self.set_lock(False)
        else:
            raise CommandError(f"unknown elevator command {name!r}")

    def begin_goto_row(self, row: int) -> None:
        if self.busy:
            raise BusyError("elevator is busy")
        if not 0 <= row < self.n_rows:
            raise BoundsError(f"row {row} beyond travel (rows 0..{self.n_rows - 1})")
        if (
            self.occupant is not None
            and self.occupant[1] is not None
            and not self.lock_engaged
        ):
            raise InterlockError(
                "carriage aboard with lock disengaged; engage the lock first"
            )
        if row == self.target_row and self.height == row * self.pitch:
            self._emit("arrive", row=row, height=self.height)
            return  # already there, zero elapsed time
        self.target_row = row
        self.machine = ElevatorMachine.MOVING
        self._emit("phase_change", state="moving", target_row=row)

    def set_lock(self, engaged: bool) -> None:
        if self.machine != ElevatorMachine.AT_ROW:
            raise InterlockError("lock can only change while parked at a row")
        if engaged != self.lock_engaged:
            self.lock_engaged = engaged
            self._emit("lock" if engaged else "unlock", row=self.target_row)

    # -- occupancy, driven by the world ---------------------------------------

    def set_occupant(self, mover_id: str, carriage_id: str | None) -> None:
        self.occupant = (mover_id, carriage_id)

    def set_occupant_carriage(self, carriage_id: str | None) -> None:
        if self.occupant is None:
            raise CommandError("no occupant aboard")
        self.occupant = (self.occupant[0], carriage_id)

    def clear_occupant(self) -> None:
        self.occupant = None

    # -- time advance ---------------------------------------------------------

    def step(self, dt) -> list[tuple[str, dict]]:
        """Advance by dt seconds; returns the events emitted during it."""
        if not dt > 0:
            raise ValueError("dt must be > 0")
        if self.machine != ElevatorMachine.AT_ROW:
            target = self.target_row * self.pitch
            remaining = target - self.height
            direction = 1 if remaining >= 0 else -1
            advance = min(self.speed * dt, abs(remaining))
            self.height = self.height + direction * advance
            rest = abs(target - self.height)
            if rest == 0:
                self.height = target
                self.machine = ElevatorMachine.AT_ROW
                self._emit("arrive", row=self.target_row, height=self.height)
                if self.world is not None:
                    self.world.elevator_arrived(self.target_row)
            elif rest <= self.tolerance:
                if self.machine != ElevatorMachine.ALIGNING:
                    self.machine = ElevatorMachine.ALIGNING
                    self._emit("phase_change", state="aligning", row=self.target_row)
        return self.drain_events()


def elevator_step(
    fsm: ElevatorFsm, dt
) -> tuple[ElevatorState, list[tuple[str, dict]]]:
    """Advance an elevator by dt; returns (new state snapshot, events)."""
    events = fsm.step(dt)
    return fsm.state, events


def calibrate_ir(
    initial: IrCalibration,
    probe,
    bracket: tuple[float, float] = (-50.0, 50.0),
    max_probes: int = 20,
) -> IrCalibration:
    """Locate the sensor trigger boundary by bisection over mount offset.

    ``probe(offset)`` reports whether the sensor triggers with the mount
    moved by ``offset`` mm. The returned calibration's offset lies within
    ``initial.tolerance`` of the true boundary. Raises CalibrationError when
    the bracket shows no trigger transition.
    """
    lo, hi = bracket
    if not lo < hi:
        raise CalibrationError(f"empty bracket {bracket}")
    probes = 0

    def check(offset: float) -> bool:
        nonlocal probes
        probes += 1
        if probes > max_probes:
            raise CalibrationError(f"no convergence within {max_probes} probes")
        return bool(probe(offset))

    at_lo, at_hi = check(lo), check(hi)
    if at_lo == at_hi:
        raise CalibrationError(
            f"no trigger transition in bracket [{lo}, {hi}]; "
            "sensor dead or bracket too narrow"
        )
    # Keep the invariant: trigger state flips between lo and hi.
    while hi - lo > initial.tolerance:
        mid = (lo + hi) / 2
        if check(mid) == at_lo:
            lo = mid
        else:
            hi = mid
    return IrCalibration(offset=(lo + hi) / 2, tolerance=initial.tolerance)
