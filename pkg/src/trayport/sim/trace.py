"""Trace records: the serialized output of a simulation run.

A trace file is line-delimited JSON: one object per event followed by one
summary object. Serialization is canonical (sorted keys, fixed separators)
so identical runs produce identical bytes, and :func:`trace_hash` can stand
in for full comparison.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from fractions import Fraction

from trayport.sim.kernel import SimEvent


@dataclass(frozen=True)
class Trace:
    """Events plus the derived totals of one run."""

    events: tuple[SimEvent, ...]
    total_time: Fraction
    completions: tuple[tuple[str, Fraction], ...]  # (carriage_id, time)

    @property
    def total_seconds(self) -> float:
        return float(self.total_time)

    def completion_of(self, carriage_id: str) -> Fraction | None:
        for cid, t in self.completions:
            if cid == carriage_id:
                return t
        return None


def make_trace(events, completions) -> Trace:
    events = tuple(events)
    total = max((e.time for e in events), default=Fraction(0))
    return Trace(
        events=events,
        total_time=total,
        completions=tuple(completions),
    )


def _dump_line(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def dumps_trace(trace: Trace) -> str:
    lines = [_dump_line(e.as_dict()) for e in trace.events]
    lines.append(
        _dump_line(
            {
                "summary": True,
                "total_time": str(trace.total_time),
                "total_time_s": float(trace.total_time),
                "n_events": len(trace.events),
                # list of [carriage, time] pairs, in completion order
                "completions": [[cid, str(t)] for cid, t in trace.completions],
            }
        )
    )
    return "\n".join(lines) + "\n"


def dump_trace(trace: Trace, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_trace(trace))


def loads_trace(text: str) -> Trace:
    events = []
    summary = None
    for line in text.splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        if obj.get("summary"):
            summary = obj
            continue
        events.append(
            SimEvent(
                time=Fraction(obj["t"]),
                entity=obj["entity"],
                kind=obj["kind"],
                detail=tuple(sorted(obj["detail"].items())),
            )
        )
    if summary is None:
        raise ValueError("trace has no summary line")
    return Trace(
        events=tuple(events),
        total_time=Fraction(summary["total_time"]),
        completions=tuple(
            (cid, Fraction(t)) for cid, t in summary["completions"]
        ),
    )


def load_trace(path) -> Trace:
    with open(path, "r", encoding="utf-8") as fh:
        return loads_trace(fh.read())


def trace_hash(trace: Trace) -> str:
    return hashlib.sha256(dumps_trace(trace).encode("utf-8")).hexdigest()
