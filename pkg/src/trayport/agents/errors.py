"""Command-rejection errors raised by the device state machines.

A rejected command never mutates state: the caller (script coordinator,
simulation driver, or a fuzzer) sees the error, the device stays put.
"""


class CommandError(Exception):
    """Base class; ``code`` is the stable machine-readable reason."""

    code = "command_error"


class BoundsError(CommandError):
    """Target lies beyond an end stop."""

    code = "bounds"


class InterlockError(CommandError):
    """Loaded vertical motion attempted with the carriage lock disengaged."""

    code = "interlock"


class MisalignmentError(CommandError):
    """Mover commanded onto or off an elevator that is not aligned."""

    code = "misalignment"


class NoCarriageError(CommandError):
    """Engage with nothing to engage, or release with nothing held."""

    code = "no_carriage"


class BusyError(CommandError):
    """A new command was issued while another is still in progress."""

    code = "busy"


class CalibrationError(Exception):
    """IR sensor calibration could not find a trigger boundary."""
