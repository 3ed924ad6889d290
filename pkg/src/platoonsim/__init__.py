"""Deterministic discrete-time simulator of cooperative vehicle platoons.

Every simulated vehicle runs a five-layer control stack (cloud decision,
communication, management, control, physical) with an extendable
two-dimensional (maneuver x role) management framework and fault-tolerant
functionality degradation for V2V and radar failures.
"""

from .core import (
    ControllerKind,
    FaultKind,
    IllegalTransition,
    ManeuverState,
    MessageKind,
    PlatoonInfo,
    Role,
    RoleCause,
    V2VMessage,
    VehicleState,
    maneuver_transition,
    role_transition,
)
from .engine import RunReport, Simulator, Trace, replay_check, run
from .management import (
    StrategyContext,
    StrategyKey,
    StrategyOutput,
    StrategyProgress,
    StrategyRegistry,
    tick_manage,
)
from .params import Parameters
from .scenario import ScenarioSpec, SpecError, load_scenario
from .strategies import default_registry

__all__ = [
    "ControllerKind",
    "FaultKind",
    "IllegalTransition",
    "ManeuverState",
    "MessageKind",
    "Parameters",
    "PlatoonInfo",
    "Role",
    "RoleCause",
    "RunReport",
    "ScenarioSpec",
    "Simulator",
    "SpecError",
    "StrategyContext",
    "StrategyKey",
    "StrategyOutput",
    "StrategyProgress",
    "StrategyRegistry",
    "Trace",
    "V2VMessage",
    "VehicleState",
    "default_registry",
    "load_scenario",
    "maneuver_transition",
    "replay_check",
    "role_transition",
    "run",
    "tick_manage",
]

__version__ = "0.1.0"
