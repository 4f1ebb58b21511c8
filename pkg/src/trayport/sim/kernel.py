"""Event-driven simulation kernel.

Time is exact: the kernel keeps a Fraction clock and advances straight to
the next analytic completion time (arrival, latch done) instead of
integrating fixed steps, so totals agree with closed-form arithmetic to the
last bit. A fixed-step mode is kept for fuzzing the agent FSMs.

Determinism: agents are stepped in registration order every advance, and
simultaneous events are ordered by that same registration order. Two runs
of the same scenario produce identical event lists.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from trayport.agents.errors import CommandError

EVENT_KINDS = frozenset(
    {"arrive", "engage", "release", "lock", "unlock", "phase_change", "error"}
)


@dataclass(frozen=True)
class SimEvent:
    """One timestamped occurrence in a run."""

    time: Fraction
    entity: str
    kind: str
    detail: tuple  # sorted (key, value) pairs; values are str/int/float

    def as_dict(self) -> dict:
        return {
            "t": str(self.time),
            "t_s": float(self.time),
            "entity": self.entity,
            "kind": self.kind,
            "detail": dict(self.detail),
        }


def _clean_detail(detail: dict) -> tuple:
    items = []
    for key, value in sorted(detail.items()):
        if isinstance(value, Fraction):
            value = str(value)
        elif not isinstance(value, (str, int, float, bool, type(None))):
            value = str(value)
        items.append((key, value))
    return tuple(items)


class Kernel:
    """Steps a fixed set of agents; agents expose step/next_event_dt/busy."""

    def __init__(self):
        self.now: Fraction = Fraction(0)
        self.events: list[SimEvent] = []
        self._agents: list[tuple[str, object]] = []  # registration order
        self._worlds: list = []

    def add_agent(self, entity_id: str, fsm) -> None:
        self._agents.append((entity_id, fsm))

    def add_world(self, world) -> None:
        """Worlds get a conservation check after every advance."""
        self._worlds.append(world)

    def record(self, entity: str, kind: str, detail: dict) -> SimEvent:
        event = SimEvent(self.now, entity, kind, _clean_detail(detail))
        self.events.append(event)
        return event

    def _collect(self, entity_id: str, raw_events) -> None:
        for kind, detail in raw_events:
            kind = kind if kind in EVENT_KINDS else "phase_change"
            self.record(entity_id, kind, detail)

    def drain_all(self) -> None:
        """Pull any events already buffered on the agents (zero-time ops)."""
        for entity_id, fsm in self._agents:
            self._collect(entity_id, fsm.drain_events())
        for world in self._worlds:
            world.verify()

    def next_event_dt(self) -> Fraction | None:
        dts = [
            fsm.next_event_dt()
            for _, fsm in self._agents
            if fsm.next_event_dt() is not None
        ]
        return min(dts) if dts else None

    def advance(self, dt) -> list[SimEvent]:
        """Advance every busy agent by exactly dt (one tick), in order."""
        if not dt > 0:
            raise ValueError("dt must be > 0")
        self.now = self.now + dt
        start = len(self.events)
        for entity_id, fsm in self._agents:
            if fsm.next_event_dt() is not None:
                self._collect(entity_id, fsm.step(dt))
            else:
                self._collect(entity_id, fsm.drain_events())
        for world in self._worlds:
            world.verify()
        return self.events[start:]

    def advance_to_next_event(self) -> list[SimEvent] | None:
        """Jump the clock to the next analytic completion; None when idle."""
        dt = self.next_event_dt()
        if dt is None:
            return None
        return self.advance(dt)

    def run_fixed(self, dt, max_ticks: int) -> None:
        for _ in range(max_ticks):
            if self.next_event_dt() is None:
                return
            self.advance(dt)
