"""Management layer: the (maneuver x role) strategy registry and the
per-vehicle manager that selects maneuvers from triggers and dispatches to
the registered strategy each tick.

Trigger priority is cloud > hardware fault > sensor > peer announce. Only a
hardware fault may preempt a running maneuver; cloud instructions and peer
announces queue until the vehicle is back in Platooning, while sensor events
are re-evaluated fresh each tick and never queued (a stale obstacle event
would misfire after conditions changed).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Mapping, Optional, Protocol, Sequence

from .comms import PeerView, RadarReading
from .controllers import TriggerKind
from .core import (
    CloudInstructionTrigger,
    CompletedTrigger,
    ControllerKind,
    FaultKind,
    HardwareFaultTrigger,
    IllegalTransition,
    ManeuverState,
    ManeuverTrigger,
    MessageKind,
    ObstacleCutInTrigger,
    ObstacleTtcTrigger,
    PeerAnnounceTrigger,
    PlatoonInfo,
    Role,
    RoleCause,
    V2VMessage,
    VehicleId,
    VehicleState,
    maneuver_transition,
    role_transition,
)
from .params import Parameters


class DuplicateKey(Exception):
    """A strategy is already registered for this (maneuver, role) key."""


class UnknownJoiner(Exception):
    """A JoinFlag arrived from a vehicle the cloud never instructed."""


@dataclass(frozen=True)
class StrategyKey:
    maneuver: ManeuverState
    role: Role


@dataclass(frozen=True)
class ActiveInstruction:
    """Payload of the cloud instruction that launched the active maneuver."""

    maneuver: ManeuverState
    target: VehicleId
    before: Optional[VehicleId] = None  # join-middle: insert ahead of this member


@dataclass
class DriverState:
    """Scripted-driver bookkeeping for a free vehicle: the held speed plus an
    optional staggered restart that also files a join request."""

    v_set: float = 0.0
    restart_at: Optional[int] = None
    restart_v: float = 0.0
    request_join_on_restart: bool = False


@dataclass
class StrategyContext:
    """Read-only snapshot of everything one vehicle can see this tick."""

    tick: int
    dt: float
    ego_id: VehicleId
    ego: VehicleState
    role: Role
    maneuver: ManeuverState
    reading: RadarReading
    peers: Mapping[VehicleId, PeerView]
    inbox: Sequence[V2VMessage]
    platoon: Optional[PlatoonInfo]
    instruction: Optional[ActiveInstruction]
    params: Parameters
    degradation_enabled: bool = True
    own_faults: frozenset[FaultKind] = frozenset()
    driver: DriverState = field(default_factory=DriverState)

    @property
    def time(self) -> float:
        return self.tick * self.dt

    def flags(self, kind: MessageKind, sender: Optional[VehicleId] = None,
              ) -> list[V2VMessage]:
        return [m for m in self.inbox
                if m.kind is kind and (sender is None or m.sender == sender)]

    def has_flag(self, kind: MessageKind, sender: Optional[VehicleId] = None) -> bool:
        return bool(self.flags(kind, sender))

    def make(self, kind: MessageKind, **payload) -> V2VMessage:
        return V2VMessage(self.ego_id, kind, self.tick, **payload)

    def ticks(self, seconds: float) -> int:
        return self.params.ticks(seconds, self.dt)


@dataclass
class StrategyOutput:
    """What one strategy step decided: a controller selection, outgoing
    messages, an optional platoon update (leader only), an optional role
    change (only together with completion or a takeover) and flags."""

    controller: Optional[ControllerKind] = None  # None holds the previous one
    messages: list[V2VMessage] = field(default_factory=list)
    platoon_update: Optional[PlatoonInfo] = None
    role_change: Optional[Role] = None
    maneuver_done: bool = False
    takeover_requested: bool = False
    notes: list[str] = field(default_factory=list)


@dataclass
class StrategyProgress:
    """Resumable wait-state of one maneuver instance; reset on entry."""

    phase: str = "init"
    entered_tick: int = 0
    data: dict = field(default_factory=dict)

    def age(self, tick: int) -> int:
        return tick - self.entered_tick

    def advance(self, phase: str) -> None:
        self.phase = phase


class Strategy(Protocol):
    def step(self, ctx: StrategyContext, progress: StrategyProgress) -> StrategyOutput:
        ...  # pragma: no cover


class StrategyRegistry:
    """The extendable two-dimensional strategy table."""

    def __init__(self) -> None:
        self._entries: dict[StrategyKey, Strategy] = {}

    def register(self, key: StrategyKey, strategy: Strategy) -> "StrategyRegistry":
        if key in self._entries:
            raise DuplicateKey(f"strategy already registered for {key}")
        self._entries[key] = strategy
        return self

    def lookup(self, key: StrategyKey) -> Optional[Strategy]:
        return self._entries.get(key)

    def keys(self) -> tuple[StrategyKey, ...]:
        return tuple(self._entries)

    def items(self) -> tuple[tuple[StrategyKey, Strategy], ...]:
        return tuple(self._entries.items())

    def without(self, key: StrategyKey) -> "StrategyRegistry":
        """A copy of the registry with one key removed (strategies are
        independent, so dropping one must not disturb the rest)."""
        other = StrategyRegistry()
        for k, s in self._entries.items():
            if k != key:
                other.register(k, s)
        return other


@dataclass
class TickSignals:
    """Per-tick detector outputs the engine feeds into the manager."""

    instructions: Sequence[ActiveInstruction] = ()
    new_own_faults: Sequence[FaultKind] = ()
    newly_silent_peers: Sequence[VehicleId] = ()
    ttc_result: str = TriggerKind.NONE


@dataclass
class ManagerEvent:
    kind: str
    detail: str


def _role_cause(maneuver: ManeuverState, new_role: Role) -> RoleCause:
    if maneuver in (ManeuverState.JOIN_TAIL, ManeuverState.JOIN_MIDDLE):
        return RoleCause.JOIN_COMPLETED
    if maneuver in (ManeuverState.AEB_HEAD, ManeuverState.AEB_MIDDLE):
        return RoleCause.AEB_COMPLETED
    if maneuver in (ManeuverState.LEAVE_TAIL, ManeuverState.LEAVE_MIDDLE):
        return RoleCause.LEAVE_COMPLETED
    if maneuver == ManeuverState.HARDWARE_FAILURES:
        return RoleCause.TAKEOVER_COMPLETED
    # extensions: derive from the direction of the change
    return RoleCause.JOIN_COMPLETED if new_role is Role.FOLLOWER else RoleCause.LEAVE_COMPLETED


class VehicleManager:
    """One management instance per vehicle. Owns the vehicle's maneuver and
    role state, trigger queues, and strategy dispatch; all cross-vehicle
    interaction goes through the bus."""

    def __init__(self, vid: VehicleId, role: Role, registry: StrategyRegistry,
                 params: Parameters, dt: float) -> None:
        self.vid = vid
        self.role = role
        self.registry = registry
        self.params = params
        self.dt = dt
        self.maneuver = ManeuverState.PLATOONING
        self.progress = StrategyProgress()
        self.active_instruction: Optional[ActiveInstruction] = None
        self._pending_instructions: deque[ActiveInstruction] = deque()
        self._pending_announces: deque[tuple[VehicleId, ManeuverState]] = deque()
        self._pending_faults: deque[tuple[FaultKind, VehicleId, bool]] = deque()
        self.monitor_reset_requested = False

    # -- trigger handling ---------------------------------------------------

    def offer_instruction(self, instr: ActiveInstruction) -> bool:
        """Queue a cloud instruction. Free vehicles only react when they are
        the instructed target; members always take part."""
        if self.role is Role.FREE_VEHICLE and instr.target != self.vid:
            return False
        self._pending_instructions.append(instr)
        return True

    def _queue_announces(self, ctx: StrategyContext) -> None:
        if not self.role.is_member():
            return
        for msg in ctx.inbox:
            if msg.kind is not MessageKind.MANEUVER_ANNOUNCE or msg.maneuver is None:
                continue
            if msg.maneuver == self.maneuver:
                continue
            self._pending_announces.append((msg.sender, msg.maneuver))

    def _queue_faults(self, ctx: StrategyContext, signals: TickSignals) -> None:
        """Latch one-tick fault signals; they stay queued until consumed so a
        same-tick cloud instruction cannot swallow a failure."""
        if not ctx.degradation_enabled or not self.role.is_member():
            return
        if self.role is Role.FOLLOWER:
            # the leader is driver-operated and never degrades itself
            for kind in sorted(signals.new_own_faults, key=lambda k: k.value):
                self._pending_faults.append((kind, self.vid, True))
        for msg in ctx.inbox:
            if msg.kind is MessageKind.FAULT_FLAG and msg.fault is not None:
                self._pending_faults.append((msg.fault, msg.sender, False))
        for peer in sorted(signals.newly_silent_peers):
            self._pending_faults.append((FaultKind.V2V_FAIL, peer, False))

    def _fault_trigger(self) -> Optional[tuple[HardwareFaultTrigger, dict]]:
        while self._pending_faults:
            kind, faulty, own = self._pending_faults.popleft()
            if self.maneuver == ManeuverState.HARDWARE_FAILURES:
                continue  # already handling a failure; drop the duplicate
            data = {"faulty": faulty}
            if own:
                data["own_entry"] = True
            return HardwareFaultTrigger(kind), data
        return None

    def _select_trigger(self, ctx: StrategyContext, signals: TickSignals,
                        ) -> Optional[tuple[ManeuverTrigger, dict]]:
        in_platooning = self.maneuver == ManeuverState.PLATOONING
        if in_platooning and self._pending_instructions:
            instr = self._pending_instructions.popleft()
            return CloudInstructionTrigger(instr.maneuver), {"instruction": instr}
        fault = self._fault_trigger()
        if fault is not None:
            return fault
        if in_platooning and self.role.is_member():
            if signals.ttc_result == TriggerKind.AEB:
                return (ObstacleTtcTrigger(at_head=self.role is Role.LEADER),
                        {"detector": self.vid, "own_entry": True})
            if signals.ttc_result == TriggerKind.CUT_IN:
                return ObstacleCutInTrigger(), {"detector": self.vid, "own_entry": True}
        if in_platooning and self._pending_announces:
            sender, maneuver = self._pending_announces.popleft()
            return PeerAnnounceTrigger(maneuver), {"detector": sender}
        return None

    # -- tick ---------------------------------------------------------------

    def tick(self, ctx: StrategyContext, signals: TickSignals,
             ) -> tuple[StrategyOutput, list[ManagerEvent]]:
        events: list[ManagerEvent] = []
        self.monitor_reset_requested = False
        self._queue_announces(ctx)
        self._queue_faults(ctx, signals)

        entry_messages: list[V2VMessage] = []
        selected = self._select_trigger(ctx, signals)
        if selected is not None:
            trigger, data = selected
            self.maneuver = maneuver_transition(self.maneuver, trigger)
            self.progress = StrategyProgress(entered_tick=ctx.tick, data=dict(data))
            self.active_instruction = data.get("instruction")
            self.monitor_reset_requested = True
            events.append(ManagerEvent("maneuver_start", self.maneuver.name))
            if isinstance(trigger, HardwareFaultTrigger):
                if data.get("own_entry"):
                    entry_messages.append(V2VMessage(
                        self.vid, MessageKind.FAULT_FLAG, ctx.tick, fault=trigger.kind))
            elif isinstance(trigger, (ObstacleTtcTrigger, ObstacleCutInTrigger)):
                # only sensor-detected maneuvers need broadcasting: cloud
                # instructions already reach every vehicle and fault entries
                # are carried by FaultFlag
                entry_messages.append(V2VMessage(
                    self.vid, MessageKind.MANEUVER_ANNOUNCE, ctx.tick,
                    maneuver=self.maneuver))

        ctx.role = self.role
        ctx.maneuver = self.maneuver
        ctx.instruction = self.active_instruction

        strategy = self.registry.lookup(StrategyKey(self.maneuver, self.role))
        if strategy is None:
            output = StrategyOutput(notes=[
                f"no strategy for ({self.maneuver.name}, {self.role.value}); holding"])
            events.append(ManagerEvent("no_strategy",
                                       f"{self.maneuver.name}/{self.role.value}"))
        else:
            output = strategy.step(ctx, self.progress)

        output.messages = entry_messages + output.messages

        if output.role_change is not None and not (
                output.maneuver_done or output.takeover_requested):
            raise IllegalTransition(
                "role change is only allowed with maneuver completion or takeover")

        # liveness bound: abort any maneuver stuck past the timeout
        timeout_ticks = ctx.ticks(self.params.maneuver_timeout_s)
        if (self.maneuver != ManeuverState.PLATOONING and not output.maneuver_done
                and self.progress.age(ctx.tick) > timeout_ticks):
            output.maneuver_done = True
            output.role_change = None
            output.notes.append(f"{self.maneuver.name} timed out; aborting")
            events.append(ManagerEvent("maneuver_timeout", self.maneuver.name))

        if output.maneuver_done and self.maneuver != ManeuverState.PLATOONING:
            if output.role_change is not None and output.role_change != self.role:
                cause = _role_cause(self.maneuver, output.role_change)
                new_role = role_transition(self.role, cause)
                assert new_role == output.role_change
                self.role = new_role
                events.append(ManagerEvent("role_change", self.role.value))
            events.append(ManagerEvent("maneuver_complete", self.maneuver.name))
            self.maneuver = maneuver_transition(self.maneuver, CompletedTrigger())
            self.progress = StrategyProgress(entered_tick=ctx.tick)
            self.active_instruction = None
            self.monitor_reset_requested = True
        elif output.role_change is not None and output.role_change != self.role:
            cause = _role_cause(self.maneuver, output.role_change)
            self.role = role_transition(self.role, cause)
            events.append(ManagerEvent("role_change", self.role.value))

        return output, events


def tick_manage(manager: VehicleManager, ctx: StrategyContext,
                signals: Optional[TickSignals] = None,
                ) -> StrategyOutput:
    """Single management step for one vehicle: apply maneuver triggers in
    priority order, then dispatch to the registered strategy."""
    output, _ = manager.tick(ctx, signals or TickSignals())
    return output
