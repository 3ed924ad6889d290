"""Physical layer: point-mass longitudinal dynamics, kinematic lane changes
and collision detection. All functions are pure over state snapshots; the
engine steps vehicles one tick at a time in any order.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from .core import (
    LateralCommand,
    LateralMode,
    VehicleId,
    VehicleState,
)

G = 9.81  # m/s^2

VEHICLE_WIDTH = 2.0  # m, default; overridable through scenario parameters


class InvalidLane(Exception):
    """Raised for a lane-change command to an out-of-range or non-adjacent lane."""


@dataclass(frozen=True)
class DynamicsLimits:
    """Actuation bounds. Commands are clamped, never rejected."""

    a_max: float = 0.30 * G
    d_max: float = 1.00 * G

    def __post_init__(self) -> None:
        if self.a_max <= 0 or self.d_max <= 0:
            raise ValueError("acceleration bounds must be positive")

    def clamp(self, a_cmd: float) -> float:
        return max(-self.d_max, min(self.a_max, a_cmd))


@dataclass(frozen=True)
class LaneGeometry:
    lane_count: int = 3
    lane_width: float = 3.5
    lane_change_duration: float = 3.0

    def __post_init__(self) -> None:
        if self.lane_count < 1:
            raise ValueError("lane_count must be at least 1")

    def center(self, lane: int) -> float:
        return lane * self.lane_width


def lateral_position(state: VehicleState, geom: LaneGeometry) -> float:
    """Absolute lateral position of the vehicle center (m)."""
    return geom.center(state.lane) + state.lateral_offset


def step_longitudinal(state: VehicleState, a_cmd: float, limits: DynamicsLimits,
                      dt: float) -> VehicleState:
    """Advance position and speed by one Euler step of length ``dt``.

    The command is clamped to the actuation bounds. Speed never goes
    negative: if braking would cross zero inside the step, the vehicle
    travels exactly to its stopping point and holds at standstill.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    a = limits.clamp(a_cmd)
    if state.v <= 0.0 and a <= 0.0:
        return replace(state, v=0.0, a=a if state.v > 0 else 0.0)
    v_next = state.v + a * dt
    if v_next < 0.0:
        # partial step up to the standstill instant, exact for constant a
        t_stop = state.v / -a
        s_next = state.s + state.v * t_stop + 0.5 * a * t_stop * t_stop
        return replace(state, s=s_next, v=0.0, a=a)
    s_next = state.s + state.v * dt + 0.5 * a * dt * dt
    return replace(state, s=s_next, v=v_next, a=a)


def step_lateral(state: VehicleState, lateral_cmd: LateralCommand,
                 geom: LaneGeometry, dt: float) -> VehicleState:
    """Advance the lateral state by one tick.

    LaneCenter decays the in-lane offset linearly back to the lane center.
    LaneChange moves the offset toward the adjacent target lane at
    lane_width / lane_change_duration; on arrival the lane index is updated
    and the offset reset.
    """
    rate = geom.lane_width / geom.lane_change_duration
    if lateral_cmd.mode is LateralMode.LANE_CENTER:
        off = state.lateral_offset
        if off == 0.0:
            return state
        step = rate * dt
        if abs(off) <= step:
            return replace(state, lateral_offset=0.0)
        return replace(state, lateral_offset=off - step if off > 0 else off + step)

    target = lateral_cmd.target_lane
    assert target is not None
    if target < 0 or target >= geom.lane_count:
        raise InvalidLane(f"lane {target} outside [0, {geom.lane_count})")
    if target == state.lane:
        # change already completed; settle on the center
        return step_lateral(state, LateralCommand(LateralMode.LANE_CENTER), geom, dt)
    if abs(target - state.lane) != 1:
        raise InvalidLane(f"lane {target} not adjacent to lane {state.lane}")

    direction = 1.0 if target > state.lane else -1.0
    off = state.lateral_offset + direction * rate * dt
    if abs(off) >= geom.lane_width:
        return replace(state, lane=target, lateral_offset=0.0)
    return replace(state, lateral_offset=off)


def lane_change_progress(state: VehicleState, geom: LaneGeometry) -> float:
    """Fraction of the lane width already traversed during a lane change."""
    return abs(state.lateral_offset) / geom.lane_width


def detect_collisions(states: dict[VehicleId, VehicleState], geom: LaneGeometry,
                      vehicle_width: float = VEHICLE_WIDTH,
                      ) -> list[tuple[VehicleId, VehicleId]]:
    """Report vehicle pairs whose bodies overlap.

    A pair collides when their longitudinal intervals [s - length, s]
    overlap and their lateral overlap exceeds half a vehicle width. The
    result is sorted and deduplicated, so it is deterministic.
    """
    ids = sorted(states)
    hits: list[tuple[VehicleId, VehicleId]] = []
    for i, a in enumerate(ids):
        sa = states[a]
        ya = lateral_position(sa, geom)
        for b in ids[i + 1:]:
            sb = states[b]
            if sb.rear >= sa.s or sa.rear >= sb.s:
                continue  # no longitudinal overlap
            if abs(ya - lateral_position(sb, geom)) >= vehicle_width / 2.0:
                continue
            hits.append((a, b))
    return hits


def stopping_distance(v: float, decel: float) -> float:
    """Closed-form distance to standstill under constant deceleration."""
    return v * v / (2.0 * decel)
