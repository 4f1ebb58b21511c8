"""Mover state machine: the rail-riding robot that carries carriages.

Rail coordinates run from 0 at the elevator-dock end to ``rail_length`` at
the last cell. Cells sit at ``base_offset + col * pitch``; a standalone rail
(no elevator) uses ``base_offset = 0``, a module world puts the dock one
pitch before column 0. Localisation is by counting line markers spaced one
pitch apart, so ``marker_count == position / pitch`` whenever the mover is
parked at a marker.

Commands: ``move_to(col)``, ``move_to_dock``, ``engage``, ``release``.
Speed is attained instantly; only the cruise speed is modelled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

from trayport.agents.errors import (
    BoundsError,
    BusyError,
    CommandError,
    MisalignmentError,
    NoCarriageError,
)

EXIT_LEVEL = -1  # pseudo row used while riding the elevator at the exit


class MoverMachine(str, Enum):
    PARKED = "parked"
    TRANSIT = "transit"
    UNDER_CARRIAGE = "under_carriage"
    ENGAGED = "engaged"
    ON_ELEVATOR = "on_elevator"


@dataclass(frozen=True)
class MoverState:
    """Snapshot of a mover."""

    machine: MoverMachine
    position: float
    row: int
    carrying: str | None
    marker_count: int


class _NullWorld:
    """World stub for a bare rail: no carriages, no elevator."""

    def carriage_at_cell(self, row, col):
        return None

    def platform_row(self):
        return None

    def cell_free(self, row, col):
        return True

    def mover_picked_up(self, mover_id, carriage_id, row, col):
        pass

    def mover_put_down(self, mover_id, carriage_id, row, col):
        pass

    def mover_boarded(self, mover_id, carrying):
        pass

    def mover_disembarked(self, mover_id):
        pass

    def mover_released_to_exit(self, mover_id, carriage_id):
        pass

    def next_exit_carriage(self):
        return None

    def mover_picked_up_from_exit(self, mover_id, carriage_id):
        pass


class MoverFsm:
    """Mutable mover with kinematics; emits (kind, detail) events."""

    def __init__(
        self,
        mover_id: str,
        n_cols: int,
        pitch,
        speed,
        base_offset=0,
        engage_duration=2.0,
        release_duration=2.0,
        world=None,
        row: int = 0,
    ):
        if n_cols < 1:
            raise ValueError("n_cols must be >= 1")
        if not speed > 0:
            raise ValueError("speed must be > 0")
        self.mover_id = mover_id
        self.n_cols = n_cols
        self.pitch = pitch
        self.speed = speed
        self.base_offset = base_offset
        self.engage_duration = engage_duration
        self.release_duration = release_duration
        self.world = world if world is not None else _NullWorld()
        self.rail_length = base_offset + (n_cols - 1) * pitch

        self.machine = MoverMachine.PARKED
        self.position = base_offset  # start parked at cell 0
        self.row = row
        self.carrying: str | None = None
        self.marker_count = self._marker_index(self.position)

        # in-flight command bookkeeping
        self._target = None          # rail position being moved to
        self._arrival_action = None  # "cell" | "dock"
        self._latch_remaining = None # engage/release countdown
        self._latch_action = None    # "engage" | "release" | "release_exit"
        self._latch_carriage = None
        self.events: list[tuple[str, dict]] = []

    # -- state access ---------------------------------------------------

    @property
    def state(self) -> MoverState:
        return MoverState(
            machine=self.machine,
            position=self.position,
            row=self.row,
            carrying=self.carrying,
            marker_count=self.marker_count,
        )

    @property
    def busy(self) -> bool:
        return self._target is not None or self._latch_remaining is not None

    def next_event_dt(self):
        """Time until the current activity completes, or None when idle."""
        if self._target is not None:
            return abs(self._target - self.position) / self.speed
        if self._latch_remaining is not None:
            return self._latch_remaining
        return None

    def _marker_index(self, position) -> int:
        return math.floor(position / self.pitch)

    def _cell_position(self, col):
        return self.base_offset + col * self.pitch

    def _col_at(self, position):
        """Cell column at an exactly aligned rail position, else None."""
        offset = position - self.base_offset
        if offset < 0:
            return None
        col = offset / self.pitch
        icol = int(col)
        if col == icol and 0 <= icol < self.n_cols:
            return icol
        return None

    def _emit(self, kind: str, **detail):
        self.events.append((kind, detail))

    def drain_events(self) -> list[tuple[str, dict]]:
        out, self.events = self.events, []
        return out

    # -- commands ---------------------------------------------------------

    def command(self, name: str, args: dict | None = None) -> None:
        args = args or {}
        if name == "move_to":
            self.begin_move_to(int(args["col"]))
        elif name == "move_to_dock":
            self.begin_move_to_dock()
        elif name == "engage":
            self.begin_engage()
        elif name == "release":
            self.begin_release()
        else:
            raise CommandError(f"unknown mover command {name!r}")

    def begin_move_to(self, col: int) -> None:
        if self.busy:
            raise BusyError("mover is busy")
        if not 0 <= col < self.n_cols:
            raise BoundsError(
                f"col {col} beyond rail end stop (cols 0..{self.n_cols - 1})"
            )
        if self.machine == MoverMachine.ON_ELEVATOR:
            # Rolling off the platform needs the platform aligned with a shelf.
            platform = self.world.platform_row()
            if platform is None or platform == EXIT_LEVEL:
                raise MisalignmentError("elevator platform not aligned with a shelf")
            self.row = platform
            self.world.mover_disembarked(self.mover_id)
            self._emit("phase_change", state="disembarked", row=self.row)
        target = self._cell_position(col)
        self._target = target
        self._arrival_action = "cell"
        # A loaded mover stays latched (engaged) while it moves.
        self._set_machine(
            MoverMachine.ENGAGED if self.carrying else MoverMachine.TRANSIT
        )
        if target == self.position:
            self._arrive()

    def begin_move_to_dock(self) -> None:
        if self.busy:
            raise BusyError("mover is busy")
        if self.base_offset == 0:
            raise BoundsError("this rail has no elevator dock")
        if self.machine == MoverMachine.ON_ELEVATOR:
            return  # already aboard
        platform = self.world.platform_row()
        if platform != self.row:
            raise MisalignmentError(
                f"elevator platform not aligned with row {self.row}"
            )
        self._target = 0
        self._arrival_action = "dock"
        self._set_machine(
            MoverMachine.ENGAGED if self.carrying else MoverMachine.TRANSIT
        )
        if self.position == 0:
            self._arrive()

    def begin_engage(self) -> None:
        if self.busy:
            raise BusyError("mover is busy")
        if self.carrying is not None:
            raise CommandError("already carrying a carriage")
        if self.machine == MoverMachine.ON_ELEVATOR:
            # Inbound pickup: the exit conveyor feeds carriages at level 0.
            if self.world.platform_row() != EXIT_LEVEL:
                raise MisalignmentError("exit pickup only at the exit level")
            carriage = self.world.next_exit_carriage()
            if carriage is None:
                raise NoCarriageError("no carriage waiting at the exit")
            action = "engage_exit"
        else:
            col = self._col_at(self.position)
            carriage = (
                self.world.carriage_at_cell(self.row, col) if col is not None else None
            )
            if carriage is None:
                raise NoCarriageError("no carriage at current cell")
            action = "engage"
        self._latch_remaining = self.engage_duration
        self._latch_action = action
        self._latch_carriage = carriage
        if self.engage_duration == 0:
            self._finish_latch()

    def begin_release(self) -> None:
        if self.busy:
            raise BusyError("mover is busy")
        if self.carrying is None:
            raise NoCarriageError("not carrying a carriage")
        if self.machine == MoverMachine.ON_ELEVATOR:
            if self.world.platform_row() != EXIT_LEVEL:
                raise MisalignmentError("exit handoff only at the exit level")
            action = "release_exit"
        else:
            col = self._col_at(self.position)
            if col is None:
                raise MisalignmentError("not aligned with a cell")
            if not self.world.cell_free(self.row, col):
                raise CommandError(f"cell ({col}, {self.row}) is occupied")
            action = "release"
        self._latch_remaining = self.release_duration
        self._latch_action = action
        self._latch_carriage = self.carrying
        if self.release_duration == 0:
            self._finish_latch()

    # -- time advance ------------------------------------------------------

    def step(self, dt) -> list[tuple[str, dict]]:
        """Advance by dt seconds; returns the events emitted during it."""
        if not dt > 0:
            raise ValueError("dt must be > 0")
        if self._target is not None:
            remaining = self._target - self.position
            direction = 1 if remaining >= 0 else -1
            advance = min(self.speed * dt, abs(remaining))
            new_position = self.position + direction * advance
            if new_position == self._target:
                self.position = self._target
            else:
                self.position = new_position
            self._tick_markers()
            if self.position == self._target:
                self._arrive()
        elif self._latch_remaining is not None:
            self._latch_remaining -= dt
            if not self._latch_remaining > 0:
                self._finish_latch()
        return self.drain_events()

    def _tick_markers(self):
        index = self._marker_index(self.position)
        if index != self.marker_count:
            self._emit("phase_change", state="marker", count=index)
            self.marker_count = index

    def _set_machine(self, machine: MoverMachine):
        if machine != self.machine:
            self.machine = machine
            self._emit("phase_change", state=machine.value)

    def _arrive(self):
        target, action = self._target, self._arrival_action
        self._target = None
        self._arrival_action = None
        if action == "dock":
            self._set_machine(MoverMachine.ON_ELEVATOR)
            self.world.mover_boarded(self.mover_id, self.carrying)
            self._emit("arrive", at="dock", position=self.position)
            return
        col = self._col_at(target)
        if self.carrying is not None:
            self._set_machine(MoverMachine.ENGAGED)
        elif col is not None and self.world.carriage_at_cell(self.row, col):
            self._set_machine(MoverMachine.UNDER_CARRIAGE)
        else:
            self._set_machine(MoverMachine.PARKED)
        self._emit("arrive", at=f"col {col}", position=self.position)

    def _finish_latch(self):
        action, carriage = self._latch_action, self._latch_carriage
        self._latch_remaining = None
        self._latch_action = None
        self._latch_carriage = None
        col = self._col_at(self.position)
        if action == "engage":
            self.carrying = carriage
            self.world.mover_picked_up(self.mover_id, carriage, self.row, col)
            self._set_machine(MoverMachine.ENGAGED)
            self._emit("engage", carriage=carriage, col=col, row=self.row)
        elif action == "engage_exit":
            self.carrying = carriage
            self.world.mover_picked_up_from_exit(self.mover_id, carriage)
            self._emit("engage", carriage=carriage, at="exit")
        elif action == "release":
            self.carrying = None
            self.world.mover_put_down(self.mover_id, carriage, self.row, col)
            self._set_machine(MoverMachine.PARKED)
            self._emit("release", carriage=carriage, col=col, row=self.row)
        elif action == "release_exit":
            self.carrying = None
            self.world.mover_released_to_exit(self.mover_id, carriage)
            self._emit("release", carriage=carriage, at="exit")

    # Called by the world when the elevator moves with this mover aboard.
    def carried_to_row(self, row: int):
        self.row = row


def mover_step(fsm: MoverFsm, dt) -> tuple[MoverState, list[tuple[str, dict]]]:
    """Advance a mover by dt; returns (new state snapshot, events)."""
    events = fsm.step(dt)
    return fsm.state, events
