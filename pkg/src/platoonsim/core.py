"""Shared domain types: vehicle state, roles, maneuvers, messages and the two
selection state machines used by every layer of the simulator.

All types here are immutable values; the transition functions are pure and
total over their trigger vocabulary (every pair either maps to a state or
raises :class:`IllegalTransition`).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import ClassVar, Optional, Union

VehicleId = int


class IllegalTransition(Exception):
    """Raised when a (state, trigger) pair is not an edge of the FSM."""


# ---------------------------------------------------------------------------
# Roles
# ---------------------------------------------------------------------------

class Role(enum.Enum):
    """Platoon role of a vehicle. Exactly one role is active at a time."""

    FREE_VEHICLE = "FreeVehicle"
    LEADER = "Leader"
    FOLLOWER = "Follower"

    def is_member(self) -> bool:
        return self is not Role.FREE_VEHICLE


class RoleCause(enum.Enum):
    """Completed-maneuver outcomes that may change a vehicle's role."""

    JOIN_COMPLETED = "JoinCompleted"
    AEB_COMPLETED = "AebCompleted"
    LEAVE_COMPLETED = "LeaveCompleted"
    TAKEOVER_COMPLETED = "TakeoverCompleted"


_ROLE_EDGES: dict[tuple[Role, RoleCause], Role] = {
    (Role.FREE_VEHICLE, RoleCause.JOIN_COMPLETED): Role.FOLLOWER,
    (Role.FOLLOWER, RoleCause.AEB_COMPLETED): Role.FREE_VEHICLE,
    (Role.FOLLOWER, RoleCause.LEAVE_COMPLETED): Role.FREE_VEHICLE,
    (Role.FOLLOWER, RoleCause.TAKEOVER_COMPLETED): Role.FREE_VEHICLE,
}


def role_transition(current: Role, cause: RoleCause) -> Role:
    """Return the role reached from ``current`` by the completed maneuver.

    Only the solid in-scope edges are implemented; anything else (including
    every leader transition) raises IllegalTransition.
    """
    try:
        return _ROLE_EDGES[(current, cause)]
    except KeyError:
        raise IllegalTransition(f"no role edge for ({current.value}, {cause.value})") from None


# ---------------------------------------------------------------------------
# Maneuvers
# ---------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class ManeuverState:
    """One maneuver of the two-dimensional (maneuver x role) framework.

    The core vocabulary is fixed; any other name is an extension maneuver,
    which lets new maneuvers register against the public registry without
    touching this module.
    """

    name: str

    CORE_NAMES: ClassVar[tuple[str, ...]] = (
        "Platooning",
        "JoinTail",
        "JoinMiddle",
        "LeaveTail",
        "LeaveMiddle",
        "AEBHead",
        "AEBMiddle",
        "CutIn",
        "HardwareFailures",
    )

    PLATOONING: ClassVar["ManeuverState"]
    JOIN_TAIL: ClassVar["ManeuverState"]
    JOIN_MIDDLE: ClassVar["ManeuverState"]
    LEAVE_TAIL: ClassVar["ManeuverState"]
    LEAVE_MIDDLE: ClassVar["ManeuverState"]
    AEB_HEAD: ClassVar["ManeuverState"]
    AEB_MIDDLE: ClassVar["ManeuverState"]
    CUT_IN: ClassVar["ManeuverState"]
    HARDWARE_FAILURES: ClassVar["ManeuverState"]

    @classmethod
    def extension(cls, name: str) -> "ManeuverState":
        if name in cls.CORE_NAMES:
            raise ValueError(f"{name!r} is a core maneuver, not an extension")
        return cls(name)

    @property
    def is_extension(self) -> bool:
        return self.name not in self.CORE_NAMES

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.name


ManeuverState.PLATOONING = ManeuverState("Platooning")
ManeuverState.JOIN_TAIL = ManeuverState("JoinTail")
ManeuverState.JOIN_MIDDLE = ManeuverState("JoinMiddle")
ManeuverState.LEAVE_TAIL = ManeuverState("LeaveTail")
ManeuverState.LEAVE_MIDDLE = ManeuverState("LeaveMiddle")
ManeuverState.AEB_HEAD = ManeuverState("AEBHead")
ManeuverState.AEB_MIDDLE = ManeuverState("AEBMiddle")
ManeuverState.CUT_IN = ManeuverState("CutIn")
ManeuverState.HARDWARE_FAILURES = ManeuverState("HardwareFailures")


# ---------------------------------------------------------------------------
# Maneuver triggers
# ---------------------------------------------------------------------------

class FaultKind(enum.Enum):
    """Permanent hardware failures; faults never clear once injected."""

    RADAR_FAIL = "RadarFail"
    V2V_FAIL = "V2VFail"


@dataclass(frozen=True)
class CloudInstructionTrigger:
    """Cloud layer mandated a maneuver (join/leave or extension)."""

    maneuver: ManeuverState


@dataclass(frozen=True)
class ObstacleTtcTrigger:
    """A new in-lane obstacle met the TTC condition; ``at_head`` when the
    detecting vehicle is the platoon leader."""

    at_head: bool


@dataclass(frozen=True)
class ObstacleCutInTrigger:
    """A new in-lane target appeared without meeting the TTC condition."""


@dataclass(frozen=True)
class HardwareFaultTrigger:
    """A hardware failure was detected (own device, FaultFlag, or a silent
    peer). The only trigger allowed to preempt a running maneuver."""

    kind: FaultKind


@dataclass(frozen=True)
class PeerAnnounceTrigger:
    """Another platoon member broadcast its maneuver selection."""

    maneuver: ManeuverState


@dataclass(frozen=True)
class CompletedTrigger:
    """The active maneuver finished; the vehicle returns to platooning."""


ManeuverTrigger = Union[
    CloudInstructionTrigger,
    ObstacleTtcTrigger,
    ObstacleCutInTrigger,
    HardwareFaultTrigger,
    PeerAnnounceTrigger,
    CompletedTrigger,
]


def _mandated_maneuver(trigger: ManeuverTrigger) -> ManeuverState:
    if isinstance(trigger, CloudInstructionTrigger):
        return trigger.maneuver
    if isinstance(trigger, PeerAnnounceTrigger):
        return trigger.maneuver
    if isinstance(trigger, ObstacleTtcTrigger):
        return ManeuverState.AEB_HEAD if trigger.at_head else ManeuverState.AEB_MIDDLE
    if isinstance(trigger, ObstacleCutInTrigger):
        return ManeuverState.CUT_IN
    if isinstance(trigger, HardwareFaultTrigger):
        return ManeuverState.HARDWARE_FAILURES
    raise TypeError(f"not a maneuver-starting trigger: {trigger!r}")


def maneuver_transition(current: ManeuverState, trigger: ManeuverTrigger) -> ManeuverState:
    """Pure maneuver-selection step.

    From Platooning every trigger starts its mandated maneuver; Completed
    returns any active maneuver to Platooning; a running maneuver rejects
    everything else except a hardware fault, which preempts it.
    """
    if isinstance(trigger, CompletedTrigger):
        if current == ManeuverState.PLATOONING:
            raise IllegalTransition("Platooning is not a completable maneuver")
        return ManeuverState.PLATOONING

    if isinstance(trigger, HardwareFaultTrigger):
        return ManeuverState.HARDWARE_FAILURES

    mandated = _mandated_maneuver(trigger)
    if mandated == ManeuverState.PLATOONING:
        raise IllegalTransition("Platooning cannot be mandated by a trigger")
    if current != ManeuverState.PLATOONING:
        raise IllegalTransition(
            f"maneuver {current.name} is exclusive; {type(trigger).__name__} rejected"
        )
    return mandated


# ---------------------------------------------------------------------------
# Kinematic state and controller selection
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VehicleState:
    """Kinematic truth of one vehicle.

    ``s`` is the front-bumper position on a monotone road coordinate (m);
    ``lane`` is a 0-based index (0 = rightmost); ``lateral_offset`` is the
    offset from the current lane center (m, positive toward higher lanes).
    """

    s: float
    lane: int
    v: float
    a: float = 0.0
    lateral_offset: float = 0.0
    length: float = 5.0

    def __post_init__(self) -> None:
        if self.v < 0:
            raise ValueError("speed must be non-negative")

    @property
    def rear(self) -> float:
        return self.s - self.length


class LongitudinalMode(enum.Enum):
    CC = "CC"
    ACC = "ACC"
    CACC = "CACC"
    AEB = "AEB"
    DRIVER = "Driver"


@dataclass(frozen=True)
class LongitudinalCommand:
    mode: LongitudinalMode
    v_set: Optional[float] = None  # used by CC and Driver


class LateralMode(enum.Enum):
    LANE_CENTER = "LaneCenter"
    LANE_CHANGE = "LaneChange"


@dataclass(frozen=True)
class LateralCommand:
    mode: LateralMode
    target_lane: Optional[int] = None

    def __post_init__(self) -> None:
        if self.mode is LateralMode.LANE_CHANGE and self.target_lane is None:
            raise ValueError("LaneChange requires a target lane")


LANE_CENTER = LateralCommand(LateralMode.LANE_CENTER)


@dataclass(frozen=True)
class ControllerKind:
    """Controller pair selected by the management layer for one tick."""

    longitudinal: LongitudinalCommand
    lateral: LateralCommand = LANE_CENTER


# ---------------------------------------------------------------------------
# Platoon metadata and V2V messages
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PlatoonInfo:
    """Leader-maintained platoon size and ordered member ids (head = leader).

    The leader's copy is authoritative; followers replicate it from the
    leader's heartbeat and may be one heartbeat stale.
    """

    size: int
    id_series: tuple[VehicleId, ...]

    def __post_init__(self) -> None:
        if self.size != len(self.id_series):
            raise ValueError("size must equal the length of id_series")
        if len(set(self.id_series)) != len(self.id_series):
            raise ValueError("id_series must not repeat ids")

    @classmethod
    def solo(cls, leader: VehicleId) -> "PlatoonInfo":
        return cls(1, (leader,))

    def insert_before(self, joiner: VehicleId, member: VehicleId) -> "PlatoonInfo":
        idx = self.id_series.index(member)
        series = self.id_series[:idx] + (joiner,) + self.id_series[idx:]
        return PlatoonInfo(self.size + 1, series)

    def append_tail(self, joiner: VehicleId) -> "PlatoonInfo":
        return PlatoonInfo(self.size + 1, self.id_series + (joiner,))

    def remove(self, vid: VehicleId) -> "PlatoonInfo":
        series = tuple(i for i in self.id_series if i != vid)
        return PlatoonInfo(len(series), series)

    def truncate_from(self, vid: VehicleId) -> "PlatoonInfo":
        """Drop ``vid`` and every member behind it."""
        idx = self.id_series.index(vid)
        series = self.id_series[:idx]
        return PlatoonInfo(len(series), series)

    def behind(self, ego: VehicleId, other: VehicleId) -> bool:
        """True when ``ego`` is behind ``other`` in the series order."""
        return self.id_series.index(ego) > self.id_series.index(other)


class MessageKind(enum.Enum):
    """Tagged V2V message vocabulary. Enum order fixes delivery sorting."""

    HEARTBEAT = "Heartbeat"
    JOIN_FLAG = "JoinFlag"
    UPDATE_FLAG = "UpdateFlag"
    EVADE_FLAG = "EvadeFlag"
    SAFE_FLAG = "SafeFlag"
    FAULT_FLAG = "FaultFlag"
    MANEUVER_ANNOUNCE = "ManeuverAnnounce"
    JOIN_REQUEST = "JoinRequest"
    TAKEOVER_REQUEST = "TakeoverRequest"


_KIND_ORDER = {kind: i for i, kind in enumerate(MessageKind)}


@dataclass(frozen=True)
class V2VMessage:
    """One broadcast message. Every message carries its sender and send tick;
    payload fields are populated per kind (heartbeats carry kinematics, role
    and the sender's platoon replica; FaultFlag carries the fault kind)."""

    sender: VehicleId
    kind: MessageKind
    tick_sent: int
    state: Optional[VehicleState] = None
    role: Optional[Role] = None
    platoon: Optional[PlatoonInfo] = None
    fault: Optional[FaultKind] = None
    maneuver: Optional[ManeuverState] = None

    def sort_key(self) -> tuple[int, int, int]:
        return (self.sender, _KIND_ORDER[self.kind], self.tick_sent)


def heartbeat(sender: VehicleId, tick: int, state: VehicleState, role: Role,
              platoon: Optional[PlatoonInfo]) -> V2VMessage:
    return V2VMessage(sender, MessageKind.HEARTBEAT, tick, state=state,
                      role=role, platoon=platoon)
