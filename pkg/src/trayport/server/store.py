"""Single-file sqlite persistence for the control server.

Every public method runs under one lock and commits before returning, so
callers see a serialized, durable sequence of state changes. Values that
are structured (configs, args, update files) are stored as canonical JSON.
"""

from __future__ import annotations

import base64
import json
import sqlite3
import threading

from trayport import protocol

_SCHEMA = """
CREATE TABLE IF NOT EXISTS devices (
    device_id TEXT PRIMARY KEY,
    kind TEXT NOT NULL,
    hardware_id TEXT NOT NULL UNIQUE,
    registered_at REAL NOT NULL,
    installed_version TEXT NOT NULL,
    last_seen REAL,
    last_phase TEXT,
    ui_supported INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS device_config (
    device_id TEXT NOT NULL,
    key TEXT NOT NULL,
    value TEXT NOT NULL,
    PRIMARY KEY (device_id, key)
);
CREATE TABLE IF NOT EXISTS staged_updates (
    device_id TEXT PRIMARY KEY,
    version TEXT NOT NULL,
    files TEXT NOT NULL,
    checksum TEXT NOT NULL,
    staged_at REAL NOT NULL
);
CREATE TABLE IF NOT EXISTS readings (
    seq INTEGER PRIMARY KEY AUTOINCREMENT,
    device_id TEXT NOT NULL,
    timestamp REAL NOT NULL,
    key TEXT NOT NULL,
    value TEXT NOT NULL
);
CREATE INDEX IF NOT EXISTS readings_by_device
    ON readings (device_id, timestamp);
CREATE TABLE IF NOT EXISTS scripts (
    script_id TEXT PRIMARY KEY,
    name TEXT NOT NULL,
    body TEXT NOT NULL,
    uploaded_at REAL NOT NULL
);
CREATE TABLE IF NOT EXISTS jobs (
    job_id TEXT PRIMARY KEY,
    script_id TEXT NOT NULL,
    status TEXT NOT NULL,
    steps TEXT NOT NULL,
    reason TEXT,
    started_at REAL,
    finished_at REAL,
    created_at REAL NOT NULL
);
CREATE TABLE IF NOT EXISTS commands (
    seq INTEGER PRIMARY KEY AUTOINCREMENT,
    command_id TEXT NOT NULL UNIQUE,
    device_id TEXT NOT NULL,
    job_id TEXT,
    name TEXT NOT NULL,
    args TEXT NOT NULL,
    status TEXT NOT NULL,
    detail TEXT,
    created_at REAL NOT NULL
);
"""


def _canon(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


class Store:
    def __init__(self, path: str):
        self.path = str(path)
        self._lock = threading.RLock()
        self._conn = sqlite3.connect(self.path, check_same_thread=False)
        self._conn.row_factory = sqlite3.Row
        with self._lock:
            self._conn.execute("PRAGMA journal_mode=WAL")
            self._conn.executescript(_SCHEMA)
            self._conn.commit()

    def close(self):
        with self._lock:
            self._conn.close()

    # -- devices -------------------------------------------------------------

    def insert_device(self, record: dict) -> None:
        with self._lock:
            self._conn.execute(
                "INSERT INTO devices (device_id, kind, hardware_id, registered_at,"
                " installed_version, last_seen, last_phase, ui_supported)"
                " VALUES (?, ?, ?, ?, ?, ?, ?, ?)",
                (
                    record["device_id"],
                    record["kind"],
                    record["hardware_id"],
                    record["registered_at"],
                    record["installed_version"],
                    record.get("last_seen"),
                    record.get("last_phase"),
                    int(record["ui_supported"]),
                ),
            )
            self._conn.commit()

    def device_by_hardware_id(self, hardware_id: str) -> dict | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM devices WHERE hardware_id = ?", (hardware_id,)
            ).fetchone()
        return self._device_row(row) if row else None

    def device(self, device_id: str) -> dict | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM devices WHERE device_id = ?", (device_id,)
            ).fetchone()
        return self._device_row(row) if row else None

    def devices(self) -> list[dict]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT * FROM devices ORDER BY device_id"
            ).fetchall()
        return [self._device_row(r) for r in rows]

    def _device_row(self, row) -> dict:
        return {
            "device_id": row["device_id"],
            "kind": row["kind"],
            "hardware_id": row["hardware_id"],
            "registered_at": row["registered_at"],
            "installed_version": row["installed_version"],
            "last_seen": row["last_seen"],
            "last_phase": row["last_phase"],
            "ui_supported": bool(row["ui_supported"]),
        }

    def touch_device(self, device_id: str, seen_at: float, phase: str | None) -> None:
        # last_seen is monotone: stale writers never move it backwards.
        with self._lock:
            if phase is None:
                self._conn.execute(
                    "UPDATE devices SET last_seen = MAX(COALESCE(last_seen, 0), ?)"
                    " WHERE device_id = ?",
                    (seen_at, device_id),
                )
            else:
                self._conn.execute(
                    "UPDATE devices SET last_seen = MAX(COALESCE(last_seen, 0), ?),"
                    " last_phase = ? WHERE device_id = ?",
                    (seen_at, phase, device_id),
                )
            self._conn.commit()

    def set_installed_version(self, device_id: str, version: str) -> None:
        with self._lock:
            self._conn.execute(
                "UPDATE devices SET installed_version = ? WHERE device_id = ?",
                (version, device_id),
            )
            self._conn.commit()

    # -- config ---------------------------------------------------------------

    def set_config(self, device_id: str, key: str, value) -> None:
        with self._lock:
            self._conn.execute(
                "INSERT INTO device_config (device_id, key, value) VALUES (?, ?, ?)"
                " ON CONFLICT (device_id, key) DO UPDATE SET value = excluded.value",
                (device_id, key, _canon(value)),
            )
            self._conn.commit()

    def config_map(self, device_id: str) -> dict:
        with self._lock:
            rows = self._conn.execute(
                "SELECT key, value FROM device_config WHERE device_id = ?"
                " ORDER BY key",
                (device_id,),
            ).fetchall()
        return {r["key"]: json.loads(r["value"]) for r in rows}

    # -- staged updates --------------------------------------------------------

    def stage_update(self, device_id: str, bundle: protocol.UpdateBundle,
                     staged_at: float) -> None:
        files = [
            {"path": p, "data": base64.b64encode(c).decode("ascii")}
            for p, c in bundle.files
        ]
        with self._lock:
            self._conn.execute(
                "INSERT INTO staged_updates (device_id, version, files, checksum,"
                " staged_at) VALUES (?, ?, ?, ?, ?)"
                " ON CONFLICT (device_id) DO UPDATE SET version = excluded.version,"
                " files = excluded.files, checksum = excluded.checksum,"
                " staged_at = excluded.staged_at",
                (device_id, bundle.version, _canon(files), bundle.checksum, staged_at),
            )
            self._conn.commit()

    def staged_update(self, device_id: str) -> protocol.UpdateBundle | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM staged_updates WHERE device_id = ?", (device_id,)
            ).fetchone()
        if row is None:
            return None
        files = tuple(
            (f["path"], base64.b64decode(f["data"])) for f in json.loads(row["files"])
        )
        return protocol.UpdateBundle(
            version=row["version"], files=files, checksum=row["checksum"]
        )

    def clear_staged_update(self, device_id: str) -> None:
        with self._lock:
            self._conn.execute(
                "DELETE FROM staged_updates WHERE device_id = ?", (device_id,)
            )
            self._conn.commit()

    # -- readings ---------------------------------------------------------------

    def add_reading(self, device_id: str, timestamp: float, key: str, value) -> None:
        with self._lock:
            self._conn.execute(
                "INSERT INTO readings (device_id, timestamp, key, value)"
                " VALUES (?, ?, ?, ?)",
                (device_id, timestamp, key, _canon(value)),
            )
            self._conn.commit()

    def readings(
        self,
        device_id: str,
        t_from: float | None = None,
        t_to: float | None = None,
    ) -> list[dict]:
        query = "SELECT * FROM readings WHERE device_id = ?"
        params: list = [device_id]
        if t_from is not None:
            query += " AND timestamp >= ?"
            params.append(t_from)
        if t_to is not None:
            query += " AND timestamp <= ?"
            params.append(t_to)
        query += " ORDER BY timestamp, seq"
        with self._lock:
            rows = self._conn.execute(query, params).fetchall()
        return [
            {
                "device_id": r["device_id"],
                "timestamp": r["timestamp"],
                "key": r["key"],
                "value": json.loads(r["value"]),
            }
            for r in rows
        ]

    def latest_readings_by_key(self, key_prefix: str) -> dict[str, dict]:
        """Newest reading per key among keys with the given prefix."""
        with self._lock:
            rows = self._conn.execute(
                "SELECT * FROM readings WHERE key LIKE ? ORDER BY timestamp, seq",
                (key_prefix + "%",),
            ).fetchall()
        latest: dict[str, dict] = {}
        for r in rows:
            latest[r["key"]] = {
                "device_id": r["device_id"],
                "timestamp": r["timestamp"],
                "key": r["key"],
                "value": json.loads(r["value"]),
            }
        return latest

    # -- scripts ------------------------------------------------------------------

    def add_script(self, record: dict) -> None:
        with self._lock:
            self._conn.execute(
                "INSERT INTO scripts (script_id, name, body, uploaded_at)"
                " VALUES (?, ?, ?, ?)",
                (
                    record["script_id"],
                    record["name"],
                    _canon(record["steps"]),
                    record["uploaded_at"],
                ),
            )
            self._conn.commit()

    def script(self, script_id: str) -> dict | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM scripts WHERE script_id = ?", (script_id,)
            ).fetchone()
        return self._script_row(row) if row else None

    def scripts(self) -> list[dict]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT * FROM scripts ORDER BY uploaded_at, script_id"
            ).fetchall()
        return [self._script_row(r) for r in rows]

    def _script_row(self, row) -> dict:
        return {
            "script_id": row["script_id"],
            "name": row["name"],
            "steps": json.loads(row["body"]),
            "uploaded_at": row["uploaded_at"],
        }

    # -- jobs --------------------------------------------------------------------

    def put_job(self, job: dict) -> None:
        with self._lock:
            self._conn.execute(
                "INSERT INTO jobs (job_id, script_id, status, steps, reason,"
                " started_at, finished_at, created_at) VALUES (?, ?, ?, ?, ?, ?, ?, ?)"
                " ON CONFLICT (job_id) DO UPDATE SET status = excluded.status,"
                " steps = excluded.steps, reason = excluded.reason,"
                " started_at = excluded.started_at, finished_at = excluded.finished_at",
                (
                    job["job_id"],
                    job["script_id"],
                    job["status"],
                    _canon(job["steps"]),
                    job.get("reason"),
                    job.get("started_at"),
                    job.get("finished_at"),
                    job["created_at"],
                ),
            )
            self._conn.commit()

    def job(self, job_id: str) -> dict | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM jobs WHERE job_id = ?", (job_id,)
            ).fetchone()
        return self._job_row(row) if row else None

    def jobs(self, active_only: bool = False) -> list[dict]:
        query = "SELECT * FROM jobs"
        if active_only:
            query += " WHERE status IN ('pending', 'running')"
        query += " ORDER BY created_at, job_id"
        with self._lock:
            rows = self._conn.execute(query).fetchall()
        return [self._job_row(r) for r in rows]

    def _job_row(self, row) -> dict:
        return {
            "job_id": row["job_id"],
            "script_id": row["script_id"],
            "status": row["status"],
            "steps": json.loads(row["steps"]),
            "reason": row["reason"],
            "started_at": row["started_at"],
            "finished_at": row["finished_at"],
            "created_at": row["created_at"],
        }

    # -- command queue -------------------------------------------------------------

    def enqueue_command(self, command: dict) -> None:
        with self._lock:
            self._conn.execute(
                "INSERT INTO commands (command_id, device_id, job_id, name, args,"
                " status, detail, created_at) VALUES (?, ?, ?, ?, ?, 'queued', '', ?)",
                (
                    command["command_id"],
                    command["device_id"],
                    command.get("job_id"),
                    command["name"],
                    _canon(command["args"]),
                    command["created_at"],
                ),
            )
            self._conn.commit()

    def take_queued_commands(self, device_id: str) -> list[dict]:
        """Mark all queued commands for the device delivered; FIFO order."""
        with self._lock:
            rows = self._conn.execute(
                "SELECT * FROM commands WHERE device_id = ? AND status = 'queued'"
                " ORDER BY seq",
                (device_id,),
            ).fetchall()
            taken = [self._command_row(r) for r in rows]
            if taken:
                self._conn.execute(
                    "UPDATE commands SET status = 'delivered'"
                    " WHERE device_id = ? AND status = 'queued'",
                    (device_id,),
                )
            self._conn.commit()
        return taken

    def command(self, command_id: str) -> dict | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM commands WHERE command_id = ?", (command_id,)
            ).fetchone()
        return self._command_row(row) if row else None

    def finish_command(self, command_id: str, ok: bool, detail: str) -> None:
        with self._lock:
            self._conn.execute(
                "UPDATE commands SET status = ?, detail = ? WHERE command_id = ?",
                ("done" if ok else "failed", detail, command_id),
            )
            self._conn.commit()

    def _command_row(self, row) -> dict:
        return {
            "command_id": row["command_id"],
            "device_id": row["device_id"],
            "job_id": row["job_id"],
            "name": row["name"],
            "args": json.loads(row["args"]),
            "status": row["status"],
            "detail": row["detail"],
            "created_at": row["created_at"],
        }

    # -- persistence check -----------------------------------------------------------

    def snapshot_bytes(self) -> bytes:
        """Canonical serialization of all durable state, for restart checks."""
        with self._lock:
            devices = self.devices()
            state = {
                "devices": devices,
                "configs": {d["device_id"]: self.config_map(d["device_id"])
                            for d in devices},
                "staged": {
                    d["device_id"]: {
                        "version": b.version,
                        "checksum": b.checksum,
                        "files": [
                            [p, base64.b64encode(c).decode("ascii")]
                            for p, c in b.files
                        ],
                    }
                    for d in devices
                    if (b := self.staged_update(d["device_id"])) is not None
                },
                "readings": {
                    d["device_id"]: self.readings(d["device_id"]) for d in devices
                },
                "scripts": self.scripts(),
            }
        return (_canon(state) + "\n").encode("utf-8")
