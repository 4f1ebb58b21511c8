"""Deterministic discrete-event simulator for farm load/unload scenarios."""

from trayport.sim.kernel import Kernel, SimEvent
from trayport.sim.scenario import (
    Goal,
    LoadAll,
    MoveOne,
    Placement,
    Scenario,
    ScenarioError,
    UnloadAll,
    load_scenario,
    scenario_from_dict,
)
from trayport.sim.run import run_scenario
from trayport.sim.trace import Trace, dump_trace, load_trace, trace_hash

__all__ = [
    "Goal",
    "Kernel",
    "LoadAll",
    "MoveOne",
    "Placement",
    "Scenario",
    "ScenarioError",
    "SimEvent",
    "Trace",
    "UnloadAll",
    "dump_trace",
    "load_scenario",
    "load_trace",
    "run_scenario",
    "scenario_from_dict",
    "trace_hash",
]
