"""Control server: device registry, staged updates, readings, scripts, and
the coordinator that walks multi-device scripts step by step."""

from trayport.server.core import (
    BusyError,
    ControlServer,
    IntegrityError,
    NotFoundError,
    ValidationError,
)

__all__ = [
    "BusyError",
    "ControlServer",
    "IntegrityError",
    "NotFoundError",
    "ValidationError",
]
