"""Run-wide parameter block shared by the management layer and the engine.

Every field is overridable from a scenario file; defaults reproduce the
reference setup (20 m/s highway platoon, 0.05 s tick).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .comms import BusConfig
from .controllers import GainSet, SpacingPolicy, TtcConfig
from .dynamics import DynamicsLimits, LaneGeometry


@dataclass(frozen=True)
class Parameters:
    limits: DynamicsLimits = field(default_factory=DynamicsLimits)
    geometry: LaneGeometry = field(default_factory=LaneGeometry)
    bus: BusConfig = field(default_factory=BusConfig)
    spacing: SpacingPolicy = field(default_factory=SpacingPolicy)
    gains: GainSet = field(default_factory=GainSet)
    ttc: TtcConfig = field(default_factory=TtcConfig)

    platoon_speed: float = 20.0          # m/s cruise setpoint for the leader
    radar_max_range: float = 200.0       # m
    vehicle_width: float = 2.0           # m, for collision / lateral overlap
    vehicle_length: float = 5.0          # m
    heartbeat_timeout_s: float = 0.5     # peer-failure detection latency
    join_gap: float = 30.0               # m, JoinFlag / evade threshold
    evade_speed: float = 15.0            # m/s while opening a join gap
    aeb_middle_wait_speed: float = 10.0  # m/s for members ahead of the trigger
    cc_fault_speed_drop: float = 2.0     # m/s below speed-at-failure for CC
    takeover_delay_s: float = 3.0        # driver reaction after a request
    restart_stagger_s: float = 1.0       # per-vehicle restart spacing post-AEB
    join_service_delay_s: float = 1.0    # cloud answer delay for JoinRequests
    maneuver_timeout_s: float = 60.0     # liveness bound on any wait state
    obstacle_clear_range: float = 60.0   # m, in-lane gap treated as "gone"
    approach_speed_cap: float = 28.0     # m/s bound during catch-up phases
    driver_headway: float = 0.3          # s, simulated-driver braking floor

    def ticks(self, seconds: float, dt: float) -> int:
        return max(1, round(seconds / dt))

    def heartbeat_timeout_ticks(self, dt: float) -> int:
        return self.ticks(self.heartbeat_timeout_s, dt)
