"""Simulated device firmware: mover and elevator state machines, the shared
module world they act on, and the runtime that speaks the wire protocol."""

from trayport.agents.errors import (
    BoundsError,
    CalibrationError,
    CommandError,
    InterlockError,
    MisalignmentError,
    NoCarriageError,
)
from trayport.agents.mover import MoverFsm, MoverMachine, MoverState, mover_step
from trayport.agents.elevator import (
    ElevatorFsm,
    ElevatorMachine,
    ElevatorState,
    IrCalibration,
    calibrate_ir,
    elevator_step,
)
from trayport.agents.world import ModuleWorld

__all__ = [
    "BoundsError",
    "CalibrationError",
    "CommandError",
    "ElevatorFsm",
    "ElevatorMachine",
    "ElevatorState",
    "InterlockError",
    "IrCalibration",
    "MisalignmentError",
    "ModuleWorld",
    "MoverFsm",
    "MoverMachine",
    "MoverState",
    "NoCarriageError",
    "calibrate_ir",
    "elevator_step",
    "mover_step",
]
