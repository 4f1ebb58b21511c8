"""Wire messages shared by the control server and its devices.

Transport is device-initiated HTTP with JSON bodies: devices are in deep
sleep most of the time, so the server never connects to them. Every encoded
message is a self-describing JSON object with a ``type`` tag and a protocol
version ``v``; unknown fields are ignored on decode so old decoders keep
working against newer peers.
"""

from __future__ import annotations

import base64
import hashlib
import json
import posixpath
from dataclasses import dataclass, field
from enum import Enum

PROTOCOL_VERSION = 1


class DeviceKind(str, Enum):
    """The two remotely controllable device kinds in v1."""

    MOVER = "mover"
    ELEVATOR = "elevator"


class DeviceCyclePhase(str, Enum):
    """Phases of the device lifecycle loop, in order."""

    WAKE = "wake"
    PRE_UPDATE = "pre_update"
    RUN_MAIN = "run_main"
    POST_UPDATE = "post_update"
    DEEP_SLEEP = "deep_sleep"


_PHASE_ORDER = (
    DeviceCyclePhase.WAKE,
    DeviceCyclePhase.PRE_UPDATE,
    DeviceCyclePhase.RUN_MAIN,
    DeviceCyclePhase.POST_UPDATE,
    DeviceCyclePhase.DEEP_SLEEP,
)


def next_phase(phase: DeviceCyclePhase) -> DeviceCyclePhase:
    """The unique successor in the five-phase cycle (deep_sleep wraps to wake)."""
    i = _PHASE_ORDER.index(DeviceCyclePhase(phase))
    return _PHASE_ORDER[(i + 1) % len(_PHASE_ORDER)]


class DecodeError(ValueError):
    """Raised when bytes cannot be decoded into a message.

    ``offset`` is the byte position where decoding failed (0 when the
    failure is structural rather than syntactic).
    """

    def __init__(self, message: str, offset: int = 0):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class ProtocolError(ValueError):
    """A structurally valid message that violates a protocol rule."""


def parse_semver(version: str) -> tuple[int, int, int]:
    """Parse a plain ``major.minor.patch`` version string."""
    parts = version.split(".")
    if len(parts) != 3:
        raise ProtocolError(f"not a semver string: {version!r}")
    try:
        major, minor, patch = (int(p) for p in parts)
    except ValueError as exc:
        raise ProtocolError(f"not a semver string: {version!r}") from exc
    if min(major, minor, patch) < 0:
        raise ProtocolError(f"not a semver string: {version!r}")
    return (major, minor, patch)


def _safe_relative_path(path: str) -> bool:
    # Device roots are flat; reject anything that could escape them.
    if not path or path.startswith(("/", "\\")) or "\\" in path:
        return False
    if ":" in path:
        return False
    normalized = posixpath.normpath(path)
    return not (normalized.startswith("..") or normalized == ".")


@dataclass(frozen=True)
class RegistrationRequest:
    """First contact from a device; idempotent on hardware_id."""

    kind: str
    hardware_id: str
    firmware_version: str

    def __post_init__(self):
        if not self.hardware_id:
            raise ProtocolError("hardware_id must be non-empty")
        parse_semver(self.firmware_version)


@dataclass(frozen=True)
class UpdateBundle:
    """A versioned set of files staged on the server for one device.

    ``checksum`` is the SHA-256 over all files in path order; see
    :func:`bundle_checksum`.
    """

    version: str
    files: tuple[tuple[str, bytes], ...]
    checksum: str

    def __post_init__(self):
        parse_semver(self.version)
        if not isinstance(self.files, tuple):
            object.__setattr__(self, "files", tuple(tuple(f) for f in self.files))
        for path, _ in self.files:
            if not _safe_relative_path(path):
                raise ProtocolError(f"unsafe file path in bundle: {path!r}")

    def verify(self) -> bool:
        return bundle_checksum(self.files) == self.checksum


def bundle_checksum(files) -> str:
    """SHA-256 over ``path NUL content NUL`` for every file, sorted by path."""
    h = hashlib.sha256()
    for path, content in sorted(files, key=lambda f: f[0]):
        h.update(path.encode("utf-8"))
        h.update(b"\0")
        h.update(content)
        h.update(b"\0")
    return h.hexdigest()


def make_bundle(version: str, files) -> UpdateBundle:
    files = tuple((path, bytes(content)) for path, content in files)
    return UpdateBundle(version=version, files=files, checksum=bundle_checksum(files))


@dataclass(frozen=True)
class Reading:
    """One datum pushed by a device."""

    device_id: str
    timestamp: float
    key: str
    value: float | int | str


@dataclass(frozen=True)
class Command:
    """A queued instruction for one device, fetched during run_main."""

    device_id: str
    name: str
    args: dict = field(default_factory=dict)
    command_id: str = ""


@dataclass(frozen=True)
class CommandResult:
    """Outcome a device reports after executing a command."""

    command_id: str
    ok: bool
    detail: str = ""
    readings: tuple = ()


# --- encoding ---------------------------------------------------------------

_TYPE_TAGS = {
    "registration_request": RegistrationRequest,
    "update_bundle": UpdateBundle,
    "reading": Reading,
    "command": Command,
    "command_result": CommandResult,
}
_TAG_BY_TYPE = {cls: tag for tag, cls in _TYPE_TAGS.items()}


def _to_wire(message) -> dict:
    if isinstance(message, RegistrationRequest):
        return {
            "kind": message.kind,
            "hardware_id": message.hardware_id,
            "firmware_version": message.firmware_version,
        }
    if isinstance(message, UpdateBundle):
        return {
            "version": message.version,
            "files": [
                {"path": path, "data": base64.b64encode(content).decode("ascii")}
                for path, content in message.files
            ],
            "checksum": message.checksum,
        }
    if isinstance(message, Reading):
        return {
            "device_id": message.device_id,
            "timestamp": message.timestamp,
            "key": message.key,
            "value": message.value,
        }
    if isinstance(message, Command):
        return {
            "device_id": message.device_id,
            "name": message.name,
            "args": dict(message.args),
            "command_id": message.command_id,
        }
    if isinstance(message, CommandResult):
        return {
            "command_id": message.command_id,
            "ok": message.ok,
            "detail": message.detail,
            "readings": [_to_wire(r) for r in message.readings],
        }
    raise ProtocolError(f"not a wire message: {type(message).__name__}")


def _from_wire(tag: str, body: dict):
    # Only known fields are read; extra keys are forward-compatible noise.
    try:
        if tag == "registration_request":
            return RegistrationRequest(
                kind=body["kind"],
                hardware_id=body["hardware_id"],
                firmware_version=body["firmware_version"],
            )
        if tag == "update_bundle":
            files = tuple(
                (f["path"], base64.b64decode(f["data"])) for f in body["files"]
            )
            return UpdateBundle(
                version=body["version"], files=files, checksum=body["checksum"]
            )
        if tag == "reading":
            return Reading(
                device_id=body["device_id"],
                timestamp=body["timestamp"],
                key=body["key"],
                value=body["value"],
            )
        if tag == "command":
            return Command(
                device_id=body["device_id"],
                name=body["name"],
                args=dict(body.get("args") or {}),
                command_id=body.get("command_id", ""),
            )
        if tag == "command_result":
            return CommandResult(
                command_id=body["command_id"],
                ok=body["ok"],
                detail=body.get("detail", ""),
                readings=tuple(
                    _from_wire("reading", r) for r in body.get("readings", ())
                ),
            )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, DecodeError):
            raise
        raise DecodeError(f"bad {tag} body: {exc}") from exc
    raise DecodeError(f"unknown message type tag {tag!r}")


def encode(message) -> bytes:
    """Serialize a message to self-describing, versioned JSON bytes."""
    tag = _TAG_BY_TYPE.get(type(message))
    if tag is None:
        raise ProtocolError(f"not a wire message: {type(message).__name__}")
    envelope = {"type": tag, "v": PROTOCOL_VERSION, "body": _to_wire(message)}
    return json.dumps(envelope, sort_keys=True, separators=(",", ":")).encode("utf-8")


def decode(data: bytes):
    """Parse bytes produced by :func:`encode` (or a newer compatible peer)."""
    try:
        envelope = json.loads(data.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise DecodeError("not utf-8", offset=exc.start) from exc
    except json.JSONDecodeError as exc:
        raise DecodeError(f"not json: {exc.msg}", offset=exc.pos) from exc
    if not isinstance(envelope, dict):
        raise DecodeError("message envelope must be a json object")
    if "type" not in envelope or "body" not in envelope:
        raise DecodeError("message envelope needs 'type' and 'body'")
    return _from_wire(envelope["type"], envelope["body"])
