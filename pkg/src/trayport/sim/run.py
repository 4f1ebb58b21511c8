"""Scenario execution: sequential trip policies driven through the kernel.

The transport policy is deliberately sequential (one carriage in flight per
module): per carriage the platform rises to its shelf, the mover rolls out,
latches, rolls back aboard, the lock engages, and the platform descends to
the exit where the carriage is handed off. Loading is the mirror image.
Modules run in parallel (independent movers and elevators) or serially,
per the scenario's ``modules_mode``.

Per-carriage cost with unit times t_h, t_v: 2(col+1)*t_h + 2(row+1)*t_v
plus one latch; summed over a full n_h x n_v module this is exactly
n_h*n_v*((n_h+1)*t_h + (n_v+1)*t_v) + n_h*n_v*t_engage.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from trayport.agents.errors import CommandError
from trayport.agents.world import ModuleWorld
from trayport.sim.kernel import Kernel
from trayport.sim.scenario import (
    LoadAll,
    MoveOne,
    Placement,
    Scenario,
    ScenarioError,
    UnloadAll,
)
from trayport.sim.trace import Trace, make_trace


def _column_major(placements: list[Placement]) -> list[Placement]:
    return sorted(placements, key=lambda p: (p.col, p.row))


def _unload_trips(placements: list[Placement]):
    for p in _column_major(placements):
        yield ("elevator", "goto_row", {"row": p.row + 1})
        yield ("mover", "move_to", {"col": p.col})
        yield ("mover", "engage", {})
        yield ("mover", "move_to_dock", {})
        yield ("elevator", "lock", {})
        yield ("elevator", "goto_row", {"row": 0})
        yield ("elevator", "unlock", {})
        yield ("mover", "release", {})


def _load_trips(placements: list[Placement]):
    for p in placements:  # inbound order is the exit-queue order
        yield ("mover", "engage", {})
        yield ("elevator", "lock", {})
        yield ("elevator", "goto_row", {"row": p.row + 1})
        yield ("elevator", "unlock", {})
        yield ("mover", "move_to", {"col": p.col})
        yield ("mover", "release", {})
        yield ("mover", "move_to_dock", {})
        yield ("elevator", "goto_row", {"row": 0})


def _move_one_trips(src: Placement, dest_col: int, dest_row: int):
    yield ("elevator", "goto_row", {"row": src.row + 1})
    yield ("mover", "move_to", {"col": src.col})
    yield ("mover", "engage", {})
    yield ("mover", "move_to_dock", {})
    yield ("elevator", "lock", {})
    yield ("elevator", "goto_row", {"row": dest_row + 1})
    yield ("elevator", "unlock", {})
    yield ("mover", "move_to", {"col": dest_col})
    yield ("mover", "release", {})
    yield ("mover", "move_to_dock", {})
    yield ("elevator", "goto_row", {"row": 0})


@dataclass
class _Driver:
    module: int
    world: ModuleWorld
    gen: object
    done: bool = False
    waiting_on: object = None  # fsm with an activity in flight


def _build_world(scenario: Scenario, module: int) -> ModuleWorld:
    spec = scenario.farm.module(module)
    _, _, speed_h, speed_v = scenario.module_timings(module)
    return ModuleWorld(
        spec,
        module_index=module,
        exact=True,
        mover_speed=speed_h,
        lift_speed=speed_v,
        engage_duration=scenario.t_engage,
        release_duration=Fraction(0),
    )


def _driver_gen(scenario: Scenario, module: int, placements: list[Placement]):
    goal = scenario.goal
    if isinstance(goal, UnloadAll):
        return _unload_trips(placements)
    if isinstance(goal, LoadAll):
        return _load_trips(placements)
    src = next(p for p in placements if p.carriage_id == goal.carriage_id)
    return _move_one_trips(src, goal.dest.col, goal.dest.row)


def _pump(kernel: Kernel, driver: _Driver) -> None:
    """Issue commands until one leaves an FSM busy or the plan is done."""
    while True:
        try:
            device, name, args = next(driver.gen)
        except StopIteration:
            driver.done = True
            driver.waiting_on = None
            return
        fsm = driver.world.mover if device == "mover" else driver.world.elevator
        entity = f"{device}-{driver.module}"
        try:
            fsm.command(name, args)
        except CommandError as exc:
            kernel.record(
                entity, "error", {"command": name, "code": exc.code, "detail": str(exc)}
            )
            raise ScenarioError(
                f"module {driver.module}: command {name} rejected: {exc}"
            ) from exc
        kernel.drain_all()
        if fsm.next_event_dt() is not None:
            driver.waiting_on = fsm
            return


def run_scenario(scenario: Scenario) -> Trace:
    """Execute a scenario to completion; deterministic, exact-time trace."""
    kernel = Kernel()
    drivers: list[_Driver] = []

    for m in range(scenario.farm.n):
        placements = [p for p in scenario.placement if p.module == m]
        world = _build_world(scenario, m)
        goal = scenario.goal
        if isinstance(goal, LoadAll):
            for p in placements:
                world.queue_inbound(p.carriage_id, mass=p.tray_mass)
        else:
            for p in placements:
                world.place_carriage(p.carriage_id, p.col, p.row, mass=p.tray_mass)
        kernel.add_agent(f"mover-{m}", world.mover)
        kernel.add_agent(f"elevator-{m}", world.elevator)
        kernel.add_world(world)
        if isinstance(goal, MoveOne) and not any(
            p.carriage_id == goal.carriage_id for p in placements
        ):
            continue  # this module has nothing to do
        if placements:
            drivers.append(_Driver(m, world, _driver_gen(scenario, m, placements)))

    serial = scenario.modules_mode == "serial"
    started = 0

    def start_ready():
        nonlocal started
        if serial:
            # one module at a time, in order
            if started < len(drivers) and all(d.done for d in drivers[:started]):
                _pump(kernel, drivers[started])
                started += 1
        else:
            while started < len(drivers):
                _pump(kernel, drivers[started])
                started += 1

    start_ready()
    while True:
        # resume any driver whose activity finished
        for driver in drivers[:started]:
            if not driver.done and driver.waiting_on is not None:
                if driver.waiting_on.next_event_dt() is None:
                    driver.waiting_on = None
                    _pump(kernel, driver)
        start_ready()
        if all(d.done for d in drivers):
            break
        if kernel.advance_to_next_event() is None:
            stuck = [d.module for d in drivers if not d.done]
            raise ScenarioError(f"simulation stalled; modules {stuck} incomplete")

    completions = _extract_completions(scenario, kernel.events)
    return make_trace(kernel.events, completions)


def _extract_completions(scenario: Scenario, events) -> list[tuple[str, Fraction]]:
    goal = scenario.goal
    completions = []
    seen = set()
    for event in events:
        if event.kind != "release":
            continue
        detail = dict(event.detail)
        carriage = detail.get("carriage")
        if carriage is None or carriage in seen:
            continue
        at_exit = detail.get("at") == "exit"
        if isinstance(goal, UnloadAll) and at_exit:
            seen.add(carriage)
            completions.append((carriage, event.time))
        elif isinstance(goal, LoadAll) and not at_exit:
            seen.add(carriage)
            completions.append((carriage, event.time))
        elif isinstance(goal, MoveOne) and carriage == goal.carriage_id and not at_exit:
            seen.add(carriage)
            completions.append((carriage, event.time))
    expected = (
        {goal.carriage_id}
        if isinstance(goal, MoveOne)
        else {p.carriage_id for p in scenario.placement}
    )
    missing = expected - seen
    if missing:
        raise ScenarioError(f"carriages never completed: {sorted(missing)}")
    return completions
