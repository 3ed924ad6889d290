"""Cloud-based decision layer, reduced to a deterministic scripted driver.

The cloud issues the scenario's join/leave instructions at their scripted
times, answers JoinRequests with a tail-join instruction after a fixed
service delay, and serializes joins so at most one is outstanding per
platoon. Instructions are omniscient and lossless: they bypass the V2V
fault model entirely.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .core import (
    LANE_CENTER,
    LateralCommand,
    LateralMode,
    ManeuverState,
    MessageKind,
    PlatoonInfo,
    V2VMessage,
    VehicleId,
    VehicleState,
)
from .management import ActiveInstruction
from .params import Parameters
from .scenario import (
    CutInEvent,
    FaultEvent,
    JoinEvent,
    LeaveEvent,
    ScenarioSpec,
)


@dataclass
class CloudState:
    pending_requests: deque = field(default_factory=deque)  # (due_tick, vid)
    outstanding_join: Optional[VehicleId] = None
    queued_targets: set = field(default_factory=set)
    issued: list = field(default_factory=list)  # (tick, ActiveInstruction)


@dataclass
class CloudOutput:
    instructions: list[ActiveInstruction] = field(default_factory=list)
    spawns: list[CutInEvent] = field(default_factory=list)
    faults: list[FaultEvent] = field(default_factory=list)


class Cloud:
    """Scripted instruction issuer plus JoinRequest service."""

    def __init__(self, spec: ScenarioSpec, params: Parameters, dt: float) -> None:
        self.spec = spec
        self.params = params
        self.dt = dt
        self.state = CloudState()
        self._events = list(spec.events)
        self._next_event = 0

    def _join_instruction(self, target: VehicleId,
                          before: Optional[VehicleId]) -> ActiveInstruction:
        maneuver = ManeuverState.JOIN_TAIL if before is None else ManeuverState.JOIN_MIDDLE
        return ActiveInstruction(maneuver=maneuver, target=target, before=before)

    def _leave_instruction(self, target: VehicleId,
                           platoon: Optional[PlatoonInfo]) -> ActiveInstruction:
        at_tail = platoon is not None and platoon.id_series \
            and platoon.id_series[-1] == target
        maneuver = ManeuverState.LEAVE_TAIL if at_tail else ManeuverState.LEAVE_MIDDLE
        return ActiveInstruction(maneuver=maneuver, target=target)

    def tick(self, tick: int, uplink: Sequence[V2VMessage],
             leader_platoon: Optional[PlatoonInfo]) -> CloudOutput:
        out = CloudOutput()
        now = tick * self.dt + 1e-9

        # a completed join clears the outstanding slot
        if (self.state.outstanding_join is not None and leader_platoon is not None
                and self.state.outstanding_join in leader_platoon.id_series):
            self.state.queued_targets.discard(self.state.outstanding_join)
            self.state.outstanding_join = None

        # file join requests (each answered at most once)
        delay = self.params.ticks(self.params.join_service_delay_s, self.dt)
        for msg in uplink:
            if msg.kind is not MessageKind.JOIN_REQUEST:
                continue
            already_member = (leader_platoon is not None
                              and msg.sender in leader_platoon.id_series)
            if msg.sender in self.state.queued_targets or already_member:
                continue
            self.state.queued_targets.add(msg.sender)
            self.state.pending_requests.append((msg.tick_sent + delay, msg.sender))

        # scripted events whose time has come
        while self._next_event < len(self._events) and \
                self._events[self._next_event].t <= now:
            event = self._events[self._next_event]
            self._next_event += 1
            if isinstance(event, JoinEvent):
                instr = self._join_instruction(event.target, event.before)
                out.instructions.append(instr)
                self.state.outstanding_join = event.target
                self.state.queued_targets.add(event.target)
            elif isinstance(event, LeaveEvent):
                out.instructions.append(self._leave_instruction(event.target,
                                                                leader_platoon))
            elif isinstance(event, CutInEvent):
                out.spawns.append(event)
            elif isinstance(event, FaultEvent):
                out.faults.append(event)

        # answer the next queued join request once nothing is outstanding
        if self.state.outstanding_join is None and self.state.pending_requests:
            due, vid = self.state.pending_requests[0]
            if tick >= due:
                self.state.pending_requests.popleft()
                instr = self._join_instruction(vid, None)
                out.instructions.append(instr)
                self.state.outstanding_join = vid

        for instr in out.instructions:
            self.state.issued.append((tick, instr))
        return out


# ---------------------------------------------------------------------------
# Scripted cut-in intruder
# ---------------------------------------------------------------------------

class IntruderScript:
    """Open-loop behavior of a cut-in vehicle.

    The intruder spawns in an adjacent lane so that its bumper gap ahead of
    the target equals ``s_offset`` at the moment it crosses the lane
    boundary. A TTC-satisfying intruder then brakes to standstill and holds;
    otherwise it cruises. After ``duration`` seconds in-lane it cuts back
    out, accelerating away.
    """

    WAITING = "waiting"
    ENTERING = "entering"
    HOLDING = "holding"
    EXITING = "exiting"
    GONE = "gone"

    def __init__(self, event: CutInEvent, vid: VehicleId, params: Parameters,
                 dt: float) -> None:
        self.event = event
        self.vid = vid
        self.params = params
        self.dt = dt
        self.phase = self.WAITING
        self.origin_lane = event.lane
        self.platoon_lane: Optional[int] = None
        self.crossed_tick: Optional[int] = None
        self.speed_delta = event.speed_delta if event.speed_delta is not None \
            else (10.0 if event.ttc_satisfying else 0.0)

    def spawn_state(self, target: VehicleState, length: float) -> VehicleState:
        """Initial kinematics at the event time, placed so the gap at lane
        entry matches the scripted offset."""
        if abs(self.origin_lane - target.lane) != 1:
            raise ValueError(
                f"cut-in lane {self.origin_lane} not adjacent to the target's "
                f"lane {target.lane} at spawn time")
        t_cross = self.params.geometry.lane_change_duration / 2.0
        v_i = max(0.0, target.v - self.speed_delta)
        spawn_s = target.s + self.event.s_offset + length + \
            (target.v - v_i) * t_cross
        self.platoon_lane = target.lane
        self.phase = self.ENTERING
        return VehicleState(s=spawn_s, lane=self.origin_lane, v=v_i, length=length)

    def step(self, tick: int, state: VehicleState,
             ) -> tuple[float, LateralCommand]:
        geom = self.params.geometry
        assert self.platoon_lane is not None
        if self.phase == self.ENTERING:
            lateral = LateralCommand(LateralMode.LANE_CHANGE, self.platoon_lane)
            crossed = (state.lane == self.platoon_lane
                       or abs(state.lateral_offset) >= geom.lane_width / 2.0)
            if crossed and self.crossed_tick is None:
                self.crossed_tick = tick
            if state.lane == self.platoon_lane and state.lateral_offset == 0.0:
                self.phase = self.HOLDING
            a_cmd = self._hold_accel(state) if self.crossed_tick is not None else 0.0
            return a_cmd, lateral

        if self.phase == self.HOLDING:
            assert self.crossed_tick is not None
            hold_ticks = self.params.ticks(self.event.duration, self.dt)
            if tick - self.crossed_tick >= hold_ticks:
                self.phase = self.EXITING
                return self.params.limits.a_max, LateralCommand(
                    LateralMode.LANE_CHANGE, self.origin_lane)
            return self._hold_accel(state), LANE_CENTER

        if self.phase == self.EXITING:
            if state.lane == self.origin_lane and state.lateral_offset == 0.0:
                self.phase = self.GONE
                return 0.0, LANE_CENTER
            a_cmd = self.params.limits.a_max if state.v < self.params.approach_speed_cap \
                else 0.0
            return a_cmd, LateralCommand(LateralMode.LANE_CHANGE, self.origin_lane)

        return 0.0, LANE_CENTER

    def _hold_accel(self, state: VehicleState) -> float:
        if self.event.ttc_satisfying and state.v > 0.0:
            return -self.params.limits.d_max
        return 0.0
