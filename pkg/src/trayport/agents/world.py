"""Shared world of one module: carriage truth plus mover/elevator wiring.

The world owns where every carriage is (a cell, latched to the mover, or
delivered to the exit conveyor) and mediates the interactions the two
devices cannot see alone: boarding the platform, riding between rows, and
the exit handoff. Every transfer asserts conservation: a carriage is in
exactly one place, and no cell holds two carriages.

Level mapping: the elevator serves n_v + 1 levels; level 0 is the carriage
exit below the bottom shelf, level r + 1 aligns with shelf row r. The mover
rail likewise starts at the elevator dock, one pitch before column 0.
"""

from __future__ import annotations

from fractions import Fraction

from trayport.agents.elevator import DEFAULT_IR_TOLERANCE, ElevatorFsm
from trayport.agents.errors import CommandError
from trayport.agents.mover import EXIT_LEVEL, MoverFsm, MoverMachine
from trayport.farm import ModuleSpec


class ConservationError(AssertionError):
    """A carriage appeared in two places, or vanished."""


class ModuleWorld:
    """One module's live state: FSMs plus authoritative carriage locations."""

    def __init__(
        self,
        spec: ModuleSpec,
        module_index: int = 0,
        mover_id: str | None = None,
        elevator_id: str | None = None,
        exact: bool = False,
        mover_speed=None,
        lift_speed=None,
        engage_duration=2.0,
        release_duration=2.0,
        ir_tolerance=DEFAULT_IR_TOLERANCE,
    ):
        self.spec = spec
        self.module_index = module_index
        num = (lambda x: Fraction(str(x))) if exact else float
        pitch_h = num(spec.pitch_h)
        pitch_v = num(spec.pitch_v)
        self.mover = MoverFsm(
            mover_id or f"mover-{module_index}",
            n_cols=spec.n_h,
            pitch=pitch_h,
            speed=num(spec.mover_speed) if mover_speed is None else mover_speed,
            base_offset=pitch_h,  # dock one pitch before col 0
            engage_duration=engage_duration,
            release_duration=release_duration,
            world=self,
        )
        self.elevator = ElevatorFsm(
            elevator_id or f"elevator-{module_index}",
            n_rows=spec.n_v + 1,  # level 0 = exit, level r+1 = shelf row r
            pitch=pitch_v,
            speed=num(spec.lift_speed) if lift_speed is None else lift_speed,
            tolerance=num(ir_tolerance),
            world=self,
        )
        # carriage_id -> ("cell", col, row) | ("mover",) | ("exit",)
        self.locations: dict[str, tuple] = {}
        self._cells: dict[tuple[int, int], str] = {}
        self.exit_queue: list[str] = []   # inbound, waiting at the exit
        self.delivered: list[str] = []    # outbound, in delivery order
        # Start with the mover aboard the platform at the exit level.
        self.mover.machine = MoverMachine.ON_ELEVATOR
        self.mover.position = 0 * pitch_h
        self.mover.marker_count = 0
        self.mover.row = EXIT_LEVEL
        self.elevator.set_occupant(self.mover.mover_id, None)

    # -- carriage placement -----------------------------------------------

    def place_carriage(self, carriage_id: str, col: int, row: int, mass=0.0):
        if not 0 <= col < self.spec.n_h or not 0 <= row < self.spec.n_v:
            raise CommandError(f"cell ({col}, {row}) outside module grid")
        if mass > self.spec.payload_max:
            raise CommandError(
                f"carriage {carriage_id} mass {mass} exceeds payload "
                f"{self.spec.payload_max} kg"
            )
        if (col, row) in self._cells:
            raise ConservationError(
                f"cell ({col}, {row}) already holds {self._cells[(col, row)]}"
            )
        if carriage_id in self.locations:
            raise ConservationError(f"carriage {carriage_id} already placed")
        self.locations[carriage_id] = ("cell", col, row)
        self._cells[(col, row)] = carriage_id

    def queue_inbound(self, carriage_id: str, mass=0.0):
        if mass > self.spec.payload_max:
            raise CommandError(
                f"carriage {carriage_id} mass {mass} exceeds payload "
                f"{self.spec.payload_max} kg"
            )
        if carriage_id in self.locations:
            raise ConservationError(f"carriage {carriage_id} already placed")
        self.locations[carriage_id] = ("exit",)
        self.exit_queue.append(carriage_id)

    # -- hooks used by MoverFsm ---------------------------------------------

    def carriage_at_cell(self, row: int, col: int):
        return self._cells.get((col, row))

    def platform_row(self):
        """Shelf row the platform is aligned at; EXIT_LEVEL at the exit,
        None while moving."""
        level = self.elevator.current_row
        if level is None:
            return None
        return EXIT_LEVEL if level == 0 else level - 1

    def cell_free(self, row: int, col: int) -> bool:
        return (col, row) not in self._cells

    def mover_picked_up(self, mover_id, carriage_id, row, col):
        if self.locations.get(carriage_id) != ("cell", col, row):
            raise ConservationError(
                f"{carriage_id} not at cell ({col}, {row}): "
                f"{self.locations.get(carriage_id)}"
            )
        del self._cells[(col, row)]
        self.locations[carriage_id] = ("mover",)

    def mover_put_down(self, mover_id, carriage_id, row, col):
        if self.locations.get(carriage_id) != ("mover",):
            raise ConservationError(f"{carriage_id} not on the mover")
        if (col, row) in self._cells:
            raise ConservationError(f"cell ({col}, {row}) occupied")
        self._cells[(col, row)] = carriage_id
        self.locations[carriage_id] = ("cell", col, row)

    def mover_boarded(self, mover_id, carrying):
        self.elevator.set_occupant(mover_id, carrying)

    def mover_disembarked(self, mover_id):
        self.elevator.clear_occupant()

    def mover_released_to_exit(self, mover_id, carriage_id):
        if self.locations.get(carriage_id) != ("mover",):
            raise ConservationError(f"{carriage_id} not on the mover")
        self.locations[carriage_id] = ("exit",)
        self.delivered.append(carriage_id)
        self.elevator.set_occupant_carriage(None)

    def next_exit_carriage(self):
        return self.exit_queue[0] if self.exit_queue else None

    def mover_picked_up_from_exit(self, mover_id, carriage_id):
        if not self.exit_queue or self.exit_queue[0] != carriage_id:
            raise ConservationError(f"{carriage_id} not first in the exit queue")
        self.exit_queue.pop(0)
        self.locations[carriage_id] = ("mover",)
        self.elevator.set_occupant_carriage(carriage_id)

    # -- hooks used by ElevatorFsm ------------------------------------------

    def elevator_arrived(self, level: int):
        if self.elevator.occupant is not None:
            row = EXIT_LEVEL if level == 0 else level - 1
            self.mover.carried_to_row(row)

    # -- invariants ------------------------------------------------------------

    def verify(self):
        """Conservation: each carriage in one place, each cell at most one."""
        cells_seen: dict[tuple[int, int], str] = {}
        on_mover = []
        for cid, loc in self.locations.items():
            if loc[0] == "cell":
                key = (loc[1], loc[2])
                if key in cells_seen:
                    raise ConservationError(
                        f"cell {key} holds both {cells_seen[key]} and {cid}"
                    )
                cells_seen[key] = cid
            elif loc[0] == "mover":
                on_mover.append(cid)
        if cells_seen != self._cells:
            raise ConservationError("cell index out of sync with locations")
        if len(on_mover) > 1:
            raise ConservationError(f"mover holds {on_mover}")
        if on_mover and self.mover.carrying != on_mover[0]:
            raise ConservationError("mover carrying flag out of sync")

    def snapshot(self):
        """Hashable full-world state, used by the model checker."""
        return (
            self.mover.state,
            self.elevator.state,
            tuple(sorted(self.locations.items())),
            tuple(self.exit_queue),
            tuple(self.delivered),
        )
