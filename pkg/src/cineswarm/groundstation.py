"""Ground control station: mission ingest, planning, events, re-planning.

The station is the single conductor. It validates and plans the mission,
pushes one PLAN per drone, broadcasts director EVENTs, watches STATUS
traffic to track which shots actually ran, and on an EMERGENCY re-plans the
remainder over the drones still healthy. It also feeds dashboards a
periodic DASH_STATE snapshot and accepts DASH_CMD operations.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Optional

from . import bus as wire
from .bus import MessageBus, WireMessage
from .geometry import LocalPoint
from .model import (
    Mission,
    ShootingAction,
    plan_to_json,
    validate_mission,
)
from .model import DronePlan
from .planner import (
    PlanResult,
    PlanStartState,
    ShotWindow,
    estimate_schedule,
    plan_mission,
    shot_endpoints,
    wind_down_plan,
)
from .simkit import World
from .worldmap import DroneSpec

GROUND = "ground"
DASH_PERIOD = 0.5


class MissionStartError(ValueError):
    """Mission failed validation; nothing was dispatched."""


@dataclass
class ReplanRecord:
    """Snapshot of one re-planning pass, enough to recompute it offline."""

    t: float
    failed: list[str]
    healthy: list[str]
    completed: list[str]
    executing: dict[str, str]  # shot -> healthy drone still flying it
    expired: list[str]
    states: dict[str, PlanStartState]
    anchors: dict[str, str]
    fired: dict[str, float]
    result: PlanResult


@dataclass
class _DroneBook:
    """What the station believes about one drone."""

    spec: DroneSpec
    plan: Optional[list] = None          # actions of the active plan
    last_status: Optional[dict] = None
    failed: bool = False


class GroundStation:
    def __init__(
        self,
        mission: Mission,
        drones: list[DroneSpec],
        world: World,
        bus_: MessageBus,
        slack: float = 10.0,
        cell: float = 2.0,
        transit_alt: float = 15.0,
    ):
        if not drones:
            raise MissionStartError("no drones available")
        findings = validate_mission(mission)
        if findings:
            raise MissionStartError("; ".join(str(f) for f in findings))
        self.mission = mission
        self.world = world
        self.bus = bus_
        self.slack = slack
        self.cell = cell
        self.transit_alt = transit_alt
        self.books = {d.drone_id: _DroneBook(spec=d) for d in drones}
        self.fired: dict[str, float] = {}
        self.completed: set[str] = set()
        self.executing: dict[str, str] = {}  # shot_id -> drone_id
        self.assignments: dict[str, str] = {}  # shot_id -> drone_id, live view
        self.replans: list[ReplanRecord] = []
        self.log: list[str] = []
        self.plan_result: Optional[PlanResult] = None
        self.event_sink = None  # callable(name, t), told about fresh fires
        self._next_dash = 0.0
        self._emergencies: list[str] = []  # drones reported failed, not yet replanned
        bus_.register(GROUND)

    @property
    def replan_pending(self) -> bool:
        return bool(self._emergencies)

    # ----------------------------------------------------------------- start

    def start(self, now: float = 0.0):
        result = plan_mission(
            self.mission, [b.spec for b in self.books.values()], self.world.map,
            slack=self.slack, cell=self.cell, transit_alt=self.transit_alt, now=now,
        )
        self.plan_result = result
        self.assignments.update(result.assignments)
        for shot_id, reason in result.uncovered:
            self.log.append(f"uncovered {shot_id}: {reason}")
        for plan in result.plans:
            self._dispatch_plan(plan)
        return result

    def _dispatch_plan(self, plan):
        # adoption is immediate on the drone (an in-flight shot is re-sent at
        # the head of its plan), so the book mirrors the dispatched actions
        self.books[plan.drone_id].plan = list(plan.actions)
        self.bus.send(GROUND, wire.PLAN, plan_to_json(plan), to={plan.drone_id})

    def _healthy(self) -> list[str]:
        return [d for d, b in self.books.items() if not b.failed]

    # ---------------------------------------------------------------- events

    def fire_event(self, name: str, now: float) -> bool:
        """Broadcast a director event. Duplicates are re-broadcast (latching
        schedulers make that harmless) but logged, and the original firing
        time is kept."""
        fresh = name not in self.fired
        if fresh:
            self.fired[name] = now
            if self.event_sink is not None:
                self.event_sink(name, now)
        else:
            self.log.append(f"duplicate event {name} at t={now:.2f}")
        self.bus.send(
            GROUND, wire.EVENT, {"name": name, "t": self.fired[name]},
            to=self._healthy(),
        )
        return fresh

    def stop_all(self, now: float):
        self.log.append(f"stop at t={now:.2f}")
        self.bus.send(GROUND, wire.STOP, {})

    def stop_drone(self, drone_id: str, now: float):
        self.log.append(f"stop {drone_id} at t={now:.2f}")
        self.bus.send(GROUND, wire.STOP, {"drone_id": drone_id}, to={drone_id})

    # ----------------------------------------------------------------- inbox

    def process(self, now: float):
        """Drain the inbox, update bookkeeping, run any queued re-plan."""
        for m in self.bus.drain(GROUND):
            if m.type == wire.STATUS:
                self._on_status(m.payload)
            elif m.type == wire.EMERGENCY:
                self._on_emergency(m, now)
        if self._emergencies:
            failed = self._emergencies
            self._emergencies = []
            self._replan(failed, now)
        if now >= self._next_dash - 1e-9:
            self._next_dash = now + DASH_PERIOD
            self._publish_dash_state(now)

    def _on_status(self, payload: dict):
        did = payload.get("drone_id")
        book = self.books.get(did)
        if book is None:
            return
        book.last_status = payload
        index = payload.get("action_index")
        phase = payload.get("phase")
        if not isinstance(index, int) or book.plan is None:
            return
        # every shot action strictly before the current index has finished
        self._sweep_completed(book.plan, index, did)
        if phase == "shooting" and 0 <= index < len(book.plan):
            a = book.plan[index]
            if isinstance(a, ShootingAction) and not book.failed:
                self.executing[a.id] = did
        elif phase == "done":
            self._sweep_completed(book.plan, len(book.plan), did)

    def _sweep_completed(self, actions: list, upto: int, drone_id: str):
        for j in range(min(upto, len(actions))):
            a = actions[j]
            if isinstance(a, ShootingAction) and a.id not in self.completed:
                self.completed.add(a.id)
                self.executing.pop(a.id, None)
                self.log.append(f"completed {a.id} by {drone_id}")

    def _on_emergency(self, m: WireMessage, now: float):
        did = m.payload.get("drone_id", m.sender)
        book = self.books.get(did)
        if book is None or book.failed:
            return
        kind = m.payload.get("kind", "unknown")
        self.log.append(f"emergency {did} ({kind}) at t={now:.2f}")
        book.failed = True
        # whatever it was filming is no longer being covered
        for shot_id, owner in list(self.executing.items()):
            if owner == did:
                del self.executing[shot_id]
        self._emergencies.append(did)

    # ---------------------------------------------------------------- replan

    def _replan(self, failed: list[str], now: float):
        healthy = self._healthy()
        self.bus.send(
            GROUND, wire.REPLAN_NOTICE, {"failed": sorted(failed), "t": now},
            to=healthy,
        )
        if not healthy:
            self.log.append("no healthy drones left; stopping mission")
            self.stop_all(now)
            return

        # a failure frees up work only if the drone still owned any
        pool_from_failed = [
            sid for sid, did in sorted(self.assignments.items())
            if did in failed and sid not in self.completed
        ]
        if not pool_from_failed:
            self.log.append("failed drones held no pending shots; plans unchanged")
            return

        # a latched-event shot lost with its drone is only worth reassigning
        # while its window is still open
        expired: set[str] = set()
        for sid in pool_from_failed:
            s = self._shot_by_id(sid)
            if (s is not None and s.start_event is not None
                    and s.start_event in self.fired
                    and now > self.fired[s.start_event] + s.duration):
                expired.add(sid)
                self.log.append(f"window expired for {sid}; not reassigned")

        # shots mid-execution on healthy drones keep running where they are;
        # everything else not yet completed goes back into the pool
        executing = {
            sid: did for sid, did in self.executing.items() if did in healthy
        }
        remaining = Mission(
            origin=self.mission.origin,
            shots=[
                s for s in self.mission.shots
                if s.id not in self.completed and s.id not in executing
                and s.id not in expired
            ],
            event_estimates=dict(self.mission.event_estimates),
        )
        remaining_ids = {s.id for s in remaining.shots}

        # windows keep the full-mission chain structure; links to shots that
        # are done or still running resolve to plain windows
        schedule = estimate_schedule(self.mission, now=now, fired_events=self.fired)
        for s in remaining.shots:
            win = schedule[s.id]
            if win.chained_to is not None and win.chained_to not in remaining_ids:
                schedule[s.id] = ShotWindow(
                    start=win.start, end=win.end,
                    chained_to=None, event_fired=win.event_fired,
                )

        states: dict[str, PlanStartState] = {}
        anchors: dict[str, str] = {}
        for did in healthy:
            book = self.books[did]
            sid = self._executing_shot_of(did, executing)
            if sid is not None:
                states[did] = self._predicted_end_state(book, sid, now)
                self._anchor_chain(sid, did, anchors, schedule,
                                   states[did].available_at)
            else:
                states[did] = self._predicted_state(book, now)
                wid = self._waiting_shot_of(book)
                if wid is not None and wid in remaining_ids:
                    anchors[wid] = did  # already staged at the entry point

        result = plan_mission(
            remaining,
            [self.books[d].spec for d in healthy],
            self.world.map,
            slack=self.slack, cell=self.cell, transit_alt=self.transit_alt,
            now=now, initial_states=states, fired_events=dict(self.fired),
            anchors=anchors, schedule=schedule,
        )
        self.assignments.update(result.assignments)
        self.replans.append(ReplanRecord(
            t=now, failed=sorted(failed), healthy=sorted(healthy),
            completed=sorted(self.completed), executing=dict(executing),
            expired=sorted(expired), states=states, anchors=anchors,
            fired=dict(self.fired), result=result,
        ))
        for shot_id, reason in result.uncovered:
            self.log.append(f"uncovered after failure {shot_id}: {reason}")
        for did in sorted(healthy):
            self._dispatch_replanned(did, executing, states, result, now)

    def _dispatch_replanned(
        self,
        did: str,
        executing: dict[str, str],
        states: dict[str, PlanStartState],
        result: PlanResult,
        now: float,
    ):
        """Send drone ``did`` its share of the re-plan.

        A drone mid-shot gets that shot back at the head of the plan (its
        scheduler carries on in place and swaps only the tail). A drone left
        airborne with nothing assigned is routed home.
        """
        book = self.books[did]
        new_plan = result.plan_for(did)
        sid = self._executing_shot_of(did, executing)
        if sid is not None:
            shot = self._shot_by_id(sid)
            if new_plan is not None:
                tail = list(new_plan.actions)
            else:
                tail = wind_down_plan(
                    self.mission.origin, self.world.map, did,
                    states[did].position, cell=self.cell,
                    transit_alt=self.transit_alt,
                ).actions
            self._dispatch_plan(DronePlan(drone_id=did, actions=[shot] + tail))
        elif new_plan is not None:
            self._dispatch_plan(new_plan)
        elif book.plan is not None and self._predicted_state(book, now).airborne:
            self._dispatch_plan(wind_down_plan(
                self.mission.origin, self.world.map, did,
                self._predicted_state(book, now).position,
                cell=self.cell, transit_alt=self.transit_alt,
            ))

    def _executing_shot_of(self, drone_id: str, executing: dict) -> Optional[str]:
        for sid, did in executing.items():
            if did == drone_id:
                return sid
        return None

    def _waiting_shot_of(self, book: _DroneBook) -> Optional[str]:
        st = book.last_status
        if st is None or st.get("phase") != "waiting_event" or book.plan is None:
            return None
        index = st.get("action_index")
        if isinstance(index, int) and 0 <= index < len(book.plan):
            a = book.plan[index]
            if isinstance(a, ShootingAction):
                return a.id
        return None

    def _shot_by_id(self, shot_id: str) -> Optional[ShootingAction]:
        for s in self.mission.shots:
            if s.id == shot_id:
                return s
        return None

    def _anchor_chain(
        self,
        executing_id: str,
        drone_id: str,
        anchors: dict[str, str],
        schedule: dict[str, ShotWindow],
        free_at: float,
    ):
        """Event-less continuations of a shot in flight must stay on the same
        drone, back to back behind its predicted end."""
        shots = self.mission.shots
        idx = next((i for i, s in enumerate(shots) if s.id == executing_id), None)
        if idx is None:
            return
        t = free_at
        for s in shots[idx + 1:]:
            if s.start_event is not None or s.id not in schedule:
                break
            anchors[s.id] = drone_id
            win = schedule[s.id]
            start = max(win.start, t)
            schedule[s.id] = ShotWindow(
                start=start, end=start + s.duration,
                chained_to=win.chained_to, event_fired=win.event_fired,
            )
            t = schedule[s.id].end

    def _predicted_end_state(
        self, book: _DroneBook, shot_id: str, now: float
    ) -> PlanStartState:
        """Where the drone will be once its in-flight shot wraps up. The
        elapsed portion is unknown at this level, so the full duration is
        assumed, which is a safe upper bound for feasibility checks."""
        base = self._predicted_state(book, now)
        shot = self._shot_by_id(shot_id)
        if shot is None:
            return base
        _, end_pos = shot_endpoints(shot, self.mission.origin)
        t_end = now + shot.duration
        budget = base.budget_left
        if budget is not None:
            budget = max(0.0, budget - (t_end - now))
        return PlanStartState(position=end_pos, available_at=t_end,
                              airborne=True, budget_left=budget)

    def _predicted_state(self, book: _DroneBook, now: float) -> PlanStartState:
        st = book.last_status
        if st is None:
            return PlanStartState(position=book.spec.home, available_at=now,
                                  airborne=False,
                                  budget_left=book.spec.flight_time_budget)
        p = st.get("position", {})
        pos = LocalPoint(float(p.get("x", 0.0)), float(p.get("y", 0.0)),
                         float(p.get("z", 0.0)))
        battery = float(st.get("battery", 1.0))
        budget = battery * book.spec.flight_time_budget
        airborne = pos.z > 0.5 and st.get("phase") not in ("idle", "done")
        return PlanStartState(position=pos, available_at=now, airborne=airborne,
                              budget_left=budget)

    # ------------------------------------------------------------- dashboard

    def dashboard_command(self, payload: dict, now: float) -> Optional[tuple]:
        """Apply a DASH_CMD. Returns an instruction the simulation host must
        carry out itself (drone failure injection), else None."""
        op = payload.get("op")
        args = payload.get("args", {})
        if op == "fire_event":
            name = args.get("name")
            if isinstance(name, str) and name:
                self.fire_event(name, now)
            return None
        if op == "stop":
            self.stop_all(now)
            return None
        if op == "fail_drone":
            did = args.get("drone_id")
            kind = args.get("kind", "low_battery")
            if isinstance(did, str) and did in self.books:
                return ("fail_drone", did, str(kind))
            return None
        self.log.append(f"unknown dashboard op {op!r}")
        return None

    def _publish_dash_state(self, now: float):
        drones = []
        plans_blob = {}
        for did in sorted(self.books):
            book = self.books[did]
            st = book.last_status or {}
            actions = book.plan or []
            compact = [_compact_action(a) for a in actions]
            plans_blob[did] = compact
            drones.append({
                "drone_id": did,
                "phase": st.get("phase", "idle"),
                "action_index": st.get("action_index", 0),
                "position": st.get("position", _point_json_of(book.spec.home)),
                "battery": st.get("battery", 1.0),
                "failed": book.failed,
                "plan": compact,
            })
        targets = []
        for tid in sorted(self.world.targets):
            t = self.world.targets[tid]
            p = t.true_position(now)
            targets.append({"target_id": tid, "position": _point_json_of(p)})
        digest = hashlib.sha256(
            json.dumps(plans_blob, sort_keys=True, separators=(",", ":")).encode()
        ).hexdigest()
        # dashboards listen through taps; drones have no use for this
        self.bus.send(GROUND, wire.DASH_STATE, {
            "t": now,
            "drones": drones,
            "targets": targets,
            "fired_events": [
                {"name": k, "t": self.fired[k]} for k in sorted(self.fired)
            ],
            "plans_digest": digest,
        }, to=())


def _point_json_of(p) -> dict:
    return {"x": p.x, "y": p.y, "z": p.z}


def _compact_action(a) -> dict:
    if isinstance(a, ShootingAction):
        return {
            "kind": "shot",
            "id": a.id,
            "shot_type": a.shot_type.value,
            "duration_s": a.duration,
            "start_event": a.start_event,
        }
    out = {"kind": a.kind.value}
    if a.alt is not None:
        out["alt"] = a.alt
    if a.waypoints:
        out["n_waypoints"] = len(a.waypoints)
    return out
