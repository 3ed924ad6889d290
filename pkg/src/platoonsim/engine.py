"""Deterministic tick loop binding all layers.

Per tick, in fixed order: cloud dispatch, sensing snapshot, bus delivery,
management per vehicle by ascending id, controller evaluation, dynamics
step, then collision detection and trace append. Every stage reads only the
pre-tick snapshot, so no vehicle ever observes another vehicle's same-tick
update and two runs of the same scenario produce bit-identical traces.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional, Union

from .cloud import Cloud, IntruderScript
from .comms import (
    FaultBoard,
    MessageBus,
    PeerViewStore,
    RadarReading,
    detect_peer_failure,
    radar_sense,
    v2v_payload,
)
from .controllers import (
    PidState,
    StaleData,
    TtcMonitor,
    acc,
    aeb,
    cacc,
    cap_speed,
    cc,
)
from .core import (
    ControllerKind,
    FaultKind,
    LongitudinalCommand,
    LongitudinalMode,
    MessageKind,
    PlatoonInfo,
    Role,
    V2VMessage,
    VehicleId,
    VehicleState,
    heartbeat,
)
from .dynamics import detect_collisions, step_lateral, step_longitudinal
from .management import (
    DriverState,
    StrategyContext,
    StrategyRegistry,
    TickSignals,
    VehicleManager,
)
from .scenario import CutInEvent, ScenarioSpec, initial_platoon
from .strategies import default_registry


class SpecHashMismatch(Exception):
    """Two traces from different scenario specs cannot be compared."""


@dataclass(frozen=True)
class EngineEvent:
    tick: int
    time: float
    vehicle: Optional[VehicleId]
    kind: str
    detail: str

    def line(self) -> str:
        who = f"v{self.vehicle}" if self.vehicle is not None else "-"
        return f"t={self.time:.3f} {who} {self.kind} {self.detail}".rstrip()


@dataclass
class Trace:
    spec_hash: str
    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)

    def write_csv(self, path: Union[str, Path]) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.columns)
            for row in self.rows:
                writer.writerow([_fmt(v) for v in row])

    def column(self, name: str) -> list:
        idx = self.columns.index(name)
        return [row[idx] for row in self.rows]


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


@dataclass
class RunReport:
    scenario: str
    spec_hash: str
    ticks: int
    sim_duration: float
    collisions: list[tuple[float, VehicleId, VehicleId]] = field(default_factory=list)
    min_gaps: dict[tuple[VehicleId, VehicleId], float] = field(default_factory=dict)
    completions: list[tuple[float, VehicleId, str]] = field(default_factory=list)
    takeovers: list[tuple[float, VehicleId]] = field(default_factory=list)
    events: list[EngineEvent] = field(default_factory=list)

    def to_text(self) -> str:
        lines = [
            f"scenario: {self.scenario}",
            f"spec_hash: {self.spec_hash}",
            f"ticks: {self.ticks}",
            f"sim_duration_s: {self.sim_duration:.3f}",
            f"collisions: {len(self.collisions)}",
        ]
        for t, a, b in self.collisions:
            lines.append(f"  t={t:.3f} pair=({a},{b})")
        lines.append("min_gaps:")
        for (front, back) in sorted(self.min_gaps):
            lines.append(f"  {front}-{back}: {self.min_gaps[(front, back)]:.3f}")
        lines.append("maneuver_completions:")
        for t, vid, name in self.completions:
            lines.append(f"  t={t:.3f} v{vid} {name}")
        lines.append("takeovers:")
        for t, vid in self.takeovers:
            lines.append(f"  t={t:.3f} v{vid}")
        return "\n".join(lines) + "\n"

    def write_events(self, path: Union[str, Path]) -> None:
        Path(path).write_text("".join(e.line() + "\n" for e in self.events))


class _Runtime:
    """Engine-side container for one vehicle."""

    def __init__(self, vid: VehicleId, state: VehicleState,
                 manager: Optional[VehicleManager],
                 script: Optional[IntruderScript] = None) -> None:
        self.vid = vid
        self.state = state
        self.manager = manager
        self.script = script
        self.active = script is None
        self.controller = ControllerKind(LongitudinalCommand(LongitudinalMode.DRIVER))
        self.driver = DriverState(v_set=state.v)
        self.peer_store = PeerViewStore()
        self.replica: Optional[PlatoonInfo] = None
        self.replica_tick = -1
        self.monitor: Optional[TtcMonitor] = None
        self.pid_acc = PidState()
        self.pid_cacc = PidState()
        self.reported_own: set[FaultKind] = set()
        self.reported_silent: set[VehicleId] = set()
        self.last_payload: dict = {}

    @property
    def managed(self) -> bool:
        return self.manager is not None

    def set_controller(self, kind: ControllerKind) -> bool:
        changed = kind != self.controller
        if kind.longitudinal.mode != self.controller.longitudinal.mode:
            self.pid_acc.reset()
            self.pid_cacc.reset()
        self.controller = kind
        return changed

    def controller_label(self) -> str:
        if self.script is not None:
            return "Script" if self.active else "Off"
        lon = self.controller.longitudinal
        if lon.v_set is not None:
            return f"{lon.mode.value}@{lon.v_set:.2f}"
        return lon.mode.value


Observer = Callable[["Simulator", int], None]


class Simulator:
    """One isolated simulation run of a scenario."""

    def __init__(self, spec: ScenarioSpec,
                 registry: Optional[StrategyRegistry] = None) -> None:
        self.spec = spec
        self.params = spec.params
        self.dt = spec.run.dt
        self.registry = registry if registry is not None else default_registry()
        self.faults = FaultBoard()
        self.bus = MessageBus(self.params.bus)
        self.cloud = Cloud(spec, self.params, self.dt)
        self.events: list[EngineEvent] = []
        self._uplink: list[V2VMessage] = []
        self._collided: set[tuple[VehicleId, VehicleId]] = set()

        series = initial_platoon(spec)
        platoon = PlatoonInfo(len(series), series) if series else None
        self.runtimes: dict[VehicleId, _Runtime] = {}
        for v in spec.vehicles:
            state = VehicleState(s=v.s, lane=v.lane, v=v.v, length=v.length)
            manager = VehicleManager(v.vid, v.role, self.registry, self.params, self.dt)
            rt = _Runtime(v.vid, state, manager)
            rt.monitor = TtcMonitor(self.params.ttc)
            rt.driver = DriverState(v_set=v.v)
            if v.role.is_member():
                rt.replica = platoon
            if v.role is Role.LEADER:
                rt.set_controller(ControllerKind(
                    LongitudinalCommand(LongitudinalMode.CC, self.params.platoon_speed)))
            elif v.role is Role.FOLLOWER:
                rt.set_controller(ControllerKind(
                    LongitudinalCommand(LongitudinalMode.CACC)))
            else:
                rt.set_controller(ControllerKind(
                    LongitudinalCommand(LongitudinalMode.DRIVER, v.v)))
            self.runtimes[v.vid] = rt

        next_vid = max(self.runtimes) + 1
        self._intruders: dict[int, VehicleId] = {}
        for i, event in enumerate(e for e in spec.events if isinstance(e, CutInEvent)):
            vid = next_vid
            next_vid += 1
            script = IntruderScript(event, vid, self.params, self.dt)
            parked = VehicleState(s=-1000.0 - 100.0 * i, lane=0, v=0.0,
                                  length=self.params.vehicle_length)
            self.runtimes[vid] = _Runtime(vid, parked, None, script)
            self._intruders[id(event)] = vid

        self.report = RunReport(scenario=spec.name, spec_hash=spec.spec_hash(),
                                ticks=spec.tick_count(),
                                sim_duration=spec.run.duration)

    # -- helpers ------------------------------------------------------------

    def _log(self, tick: int, vehicle: Optional[VehicleId], kind: str,
             detail: str = "") -> None:
        event = EngineEvent(tick, tick * self.dt, vehicle, kind, detail)
        self.events.append(event)
        self.report.events.append(event)

    def _leader_runtime(self) -> Optional[_Runtime]:
        for vid in sorted(self.runtimes):
            rt = self.runtimes[vid]
            if rt.managed and rt.manager.role is Role.LEADER and rt.active:
                return rt
        return None

    def _managed_active(self) -> list[VehicleId]:
        return [vid for vid in sorted(self.runtimes)
                if self.runtimes[vid].managed and self.runtimes[vid].active]

    def _preceding_member(self, rt: _Runtime) -> Optional[VehicleId]:
        """Nearest platoon member ahead, from the freshest raw heartbeats.
        Same-lane members win over one mid lane-change elsewhere."""
        best: Optional[tuple[int, float, VehicleId]] = None
        for peer in rt.peer_store.known_peers():
            msg = rt.peer_store.raw(peer)
            if msg is None or msg.role is None or not msg.role.is_member():
                continue
            assert msg.state is not None
            ahead = msg.state.s - rt.state.s
            if ahead <= 0.0:
                continue
            lane_rank = 0 if msg.state.lane == rt.state.lane else 1
            if best is None or (lane_rank, ahead) < best[:2]:
                best = (lane_rank, ahead, peer)
        return best[2] if best else None

    # -- per-tick stages ----------------------------------------------------

    def _stage_cloud(self, tick: int, snapshot: dict[VehicleId, VehicleState]) -> None:
        leader = self._leader_runtime()
        out = self.cloud.tick(tick, self._uplink, leader.replica if leader else None)
        self._uplink = []
        for fault in out.faults:
            self.faults.inject(fault.target, fault.kind, tick)
            self._log(tick, fault.target, "fault_injected", fault.kind.value)
        for spawn in out.spawns:
            vid = self._intruders[id(spawn)]
            rt = self.runtimes[vid]
            target_state = snapshot[spawn.target]
            rt.state = rt.script.spawn_state(target_state, self.params.vehicle_length)
            rt.active = True
            self._log(tick, vid, "cut_in_spawn",
                      f"ahead_of=v{spawn.target} gap={spawn.s_offset:.1f}")
        for instr in out.instructions:
            detail = f"{instr.maneuver.name} target=v{instr.target}"
            if instr.before is not None:
                detail += f" before=v{instr.before}"
            self._log(tick, instr.target, "instruction", detail)
            for vid in self._managed_active():
                self.runtimes[vid].manager.offer_instruction(instr)

    def _stage_sense(self, tick: int, snapshot: dict[VehicleId, VehicleState],
                     ) -> dict[VehicleId, RadarReading]:
        readings: dict[VehicleId, RadarReading] = {}
        for vid in self._managed_active():
            reading = radar_sense(vid, snapshot, self.faults,
                                  self.params.geometry, self.params.radar_max_range)
            if not self.spec.degradation_enabled and not reading.valid:
                # without fault detection the corrupted range is consumed as-is
                reading = replace(reading, valid=True)
            readings[vid] = reading
        return readings

    def _stage_bus(self, tick: int, snapshot: dict[VehicleId, VehicleState],
                   ) -> dict[VehicleId, list[V2VMessage]]:
        managed = self._managed_active()
        positions = {vid: st.s for vid, st in snapshot.items()}
        inboxes = self.bus.deliver(tick, self.faults, managed, positions)
        for vid in managed:
            rt = self.runtimes[vid]
            inbox = inboxes[vid]
            rt.peer_store.update(inbox)
            for msg in inbox:
                if (msg.kind is MessageKind.HEARTBEAT and msg.role is Role.LEADER
                        and msg.platoon is not None and msg.tick_sent > rt.replica_tick):
                    rt.replica = msg.platoon
                    rt.replica_tick = msg.tick_sent
        return inboxes

    def _stage_manage(self, tick: int, snapshot: dict[VehicleId, VehicleState],
                      readings: dict[VehicleId, RadarReading],
                      inboxes: dict[VehicleId, list[V2VMessage]]) -> None:
        sent: list[V2VMessage] = []
        hb_timeout = self.params.heartbeat_timeout_ticks(self.dt)
        for vid in self._managed_active():
            rt = self.runtimes[vid]
            reading = readings[vid]
            assert rt.monitor is not None and rt.manager is not None
            ttc_result = rt.monitor.update(reading)

            new_own: tuple[FaultKind, ...] = ()
            newly_silent: tuple[VehicleId, ...] = ()
            if self.spec.degradation_enabled:
                own = set(self.faults.active(vid))
                fresh = own - rt.reported_own
                rt.reported_own |= own
                new_own = tuple(sorted(fresh, key=lambda k: k.value))
                if rt.manager.role.is_member() and rt.replica is not None:
                    monitored = [p for p in rt.replica.id_series if p != vid]
                    ages = rt.peer_store.ages(monitored, tick)
                    silent = set(detect_peer_failure(ages, hb_timeout))
                    newly_silent = tuple(sorted(silent - rt.reported_silent))
                    rt.reported_silent |= silent

            rt.last_payload = v2v_payload(rt.peer_store, tick, hb_timeout,
                                          self.spec.degradation_enabled)
            ctx = StrategyContext(
                tick=tick, dt=self.dt, ego_id=vid, ego=snapshot[vid],
                role=rt.manager.role, maneuver=rt.manager.maneuver,
                reading=reading, peers=rt.last_payload, inbox=inboxes[vid],
                platoon=rt.replica, instruction=None, params=self.params,
                degradation_enabled=self.spec.degradation_enabled,
                own_faults=(self.faults.active(vid)
                            if self.spec.degradation_enabled else frozenset()),
                driver=rt.driver)
            signals = TickSignals(new_own_faults=new_own,
                                  newly_silent_peers=newly_silent,
                                  ttc_result=ttc_result)
            output, mevents = rt.manager.tick(ctx, signals)
            if rt.manager.monitor_reset_requested:
                rt.monitor.reset()

            for ev in mevents:
                self._log(tick, vid, ev.kind, ev.detail)
                if ev.kind == "maneuver_complete":
                    self.report.completions.append((tick * self.dt, vid, ev.detail))
            for note in output.notes:
                self._log(tick, vid, "note", note)
            if output.platoon_update is not None:
                rt.replica = output.platoon_update
                rt.replica_tick = tick
                self._log(tick, vid, "platoon_update",
                          f"series={list(output.platoon_update.id_series)}")
            if output.takeover_requested:
                self.report.takeovers.append((tick * self.dt, vid))
            for msg in output.messages:
                self.bus.send(msg, self.faults)
                sent.append(msg)
                if msg.kind is not MessageKind.HEARTBEAT:
                    self._log(tick, vid, "flag", msg.kind.value)
            if output.controller is not None and rt.set_controller(output.controller):
                self._log(tick, vid, "controller", rt.controller_label())

            hb = heartbeat(vid, tick, snapshot[vid], rt.manager.role,
                           rt.replica if rt.manager.role.is_member() else None)
            self.bus.send(hb, self.faults)
        self._uplink = sent

    def _longitudinal_command(self, rt: _Runtime, reading: RadarReading) -> float:
        params = self.params
        gains = params.gains
        lon = rt.controller.longitudinal
        v = rt.state.v
        if lon.mode is LongitudinalMode.AEB:
            return aeb(v, params.limits.d_max)
        if lon.mode is LongitudinalMode.CC:
            v_set = lon.v_set if lon.v_set is not None else params.platoon_speed
            return cc(v, v_set, gains)
        if lon.mode is LongitudinalMode.DRIVER:
            v_set = lon.v_set if lon.v_set is not None else rt.driver.v_set
            base = cc(v, v_set, gains)
            floor = params.spacing.d0 + params.driver_headway * v
            if reading.valid and reading.gap < floor:
                braking = gains.kp * (reading.gap - floor) \
                    + gains.kv * min(0.0, reading.rel_speed)
                base = min(base, braking)
            return base
        if lon.mode is LongitudinalMode.ACC:
            if not reading.valid:
                return 0.0
            cmd = acc(reading, v, params.spacing, gains, rt.pid_acc, self.dt)
            return cap_speed(cmd, v, params.approach_speed_cap, gains)
        # CACC
        if not reading.valid:
            return 0.0
        peer_id = self._preceding_member(rt)
        view = rt.last_payload.get(peer_id) if peer_id is not None else None
        if view is None:
            cmd = acc(reading, v, params.spacing, gains, rt.pid_acc, self.dt)
            return cap_speed(cmd, v, params.approach_speed_cap, gains)
        stale_after = (self.params.heartbeat_timeout_ticks(self.dt)
                       if self.spec.degradation_enabled else None)
        try:
            cmd = cacc(reading, view, v, params.spacing, gains, rt.pid_cacc,
                       self.dt, stale_after_ticks=stale_after)
        except StaleData:
            cmd = acc(reading, v, params.spacing, gains, rt.pid_acc, self.dt)
        return cap_speed(cmd, v, params.approach_speed_cap, gains)

    def _stage_step(self, tick: int, snapshot: dict[VehicleId, VehicleState],
                    readings: dict[VehicleId, RadarReading]) -> None:
        new_states: dict[VehicleId, VehicleState] = {}
        for vid in sorted(self.runtimes):
            rt = self.runtimes[vid]
            if not rt.active:
                continue
            if rt.script is not None:
                a_cmd, lateral = rt.script.step(tick, rt.state)
            else:
                a_cmd = self._longitudinal_command(rt, readings[vid])
                lateral = rt.controller.lateral
            state = step_longitudinal(snapshot[vid], a_cmd, self.params.limits, self.dt)
            new_states[vid] = step_lateral(state, lateral, self.params.geometry, self.dt)
        for vid, state in new_states.items():
            self.runtimes[vid].state = state

    def _stage_record(self, tick: int, readings: dict[VehicleId, RadarReading],
                      trace: Trace) -> bool:
        time_end = (tick + 1) * self.dt
        states = {vid: rt.state for vid, rt in self.runtimes.items() if rt.active}
        hit_pairs = detect_collisions(states, self.params.geometry,
                                      self.params.vehicle_width)
        halt = False
        for pair in hit_pairs:
            if pair not in self._collided:
                self._collided.add(pair)
                self.report.collisions.append((time_end, pair[0], pair[1]))
                self._log(tick, pair[0], "collision", f"with=v{pair[1]}")
            if self.spec.halt_on_collision:
                halt = True

        for vid in self._managed_active():
            reading = readings[vid]
            if reading.valid and reading.target is not None:
                key = (reading.target, vid)
                prev = self.report.min_gaps.get(key)
                if prev is None or reading.gap < prev:
                    self.report.min_gaps[key] = reading.gap

        row: list = [tick, time_end]
        for vid in sorted(self.runtimes):
            rt = self.runtimes[vid]
            reading = readings.get(vid)
            gap = reading.gap if reading is not None else 0.0
            if rt.managed:
                maneuver = rt.manager.maneuver.name
                role = rt.manager.role.value
                psize = (len(rt.replica.id_series)
                         if rt.replica is not None and rt.manager.role.is_member()
                         else 0)
            else:
                maneuver = "-"
                role = "-"
                psize = 0
            row.extend([rt.state.s, rt.state.lane, rt.state.v, rt.state.a,
                        rt.controller_label(), maneuver, role, gap, psize])
        trace.rows.append(tuple(row))
        return halt

    # -- run ----------------------------------------------------------------

    def run(self, observer: Optional[Observer] = None) -> tuple[Trace, RunReport]:
        columns: list[str] = ["tick", "time"]
        for vid in sorted(self.runtimes):
            columns.extend(f"v{vid}_{name}" for name in
                           ("s", "lane", "v", "a", "controller", "maneuver",
                            "role", "gap", "psize"))
        trace = Trace(self.spec.spec_hash(), tuple(columns))

        for tick in range(self.spec.tick_count()):
            snapshot = {vid: rt.state for vid, rt in self.runtimes.items() if rt.active}
            self._stage_cloud(tick, snapshot)
            snapshot = {vid: rt.state for vid, rt in self.runtimes.items() if rt.active}
            readings = self._stage_sense(tick, snapshot)
            inboxes = self._stage_bus(tick, snapshot)
            self._stage_manage(tick, snapshot, readings, inboxes)
            self._stage_step(tick, snapshot, readings)
            halt = self._stage_record(tick, readings, trace)
            if observer is not None:
                observer(self, tick)
            if halt:
                break

        self.report.ticks = len(trace.rows)
        return trace, self.report


def run(spec: ScenarioSpec, registry: Optional[StrategyRegistry] = None,
        observer: Optional[Observer] = None) -> tuple[Trace, RunReport]:
    """Run one scenario in an isolated simulator instance."""
    return Simulator(spec, registry).run(observer)


def replay_check(trace_a: Trace, trace_b: Trace) -> tuple[bool, Optional[int]]:
    """Bit-exact row comparison of two traces from the same spec.

    Returns (equal, first divergent row index). Traces from different specs
    raise SpecHashMismatch instead of comparing garbage.
    """
    if trace_a.spec_hash != trace_b.spec_hash:
        raise SpecHashMismatch("traces come from different scenario specs")
    if trace_a.columns != trace_b.columns:
        return False, 0
    for i, (ra, rb) in enumerate(zip(trace_a.rows, trace_b.rows)):
        if ra != rb:
            return False, i
    if len(trace_a.rows) != len(trace_b.rows):
        return False, min(len(trace_a.rows), len(trace_b.rows))
    return True, None
