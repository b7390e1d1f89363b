"""Reference implementations the test suite checks the package against.

Everything here is written from the problem statement, not from the package
internals: a plain-Dijkstra grid search, a haversine distance, and a
from-scratch replay of the greedy shot assignment. Keeping these separate
(and dumber) gives the tests double-entry bookkeeping: a bug in the package
and the same bug here would have to be made twice, independently.

The only package pieces the oracles reuse are primitives that are themselves
pinned by direct unit tests (LocalPoint/Polyline arithmetic, the smoothed
A* router used for travel-time estimates).
"""

from __future__ import annotations

import heapq
import math
from typing import Optional

import shapely
from shapely.geometry import Polygon

from cineswarm.astar import NoPathError, astar_path
from cineswarm.geometry import LocalPoint, Polyline, geo_to_local, rotate_z
from cineswarm.model import Mission, RTMode, ShootingAction
from cineswarm.shots import shot_offset
from cineswarm.worldmap import WorldMap

SQRT2 = math.sqrt(2.0)


# ---------------------------------------------------------------------------
# geography


def haversine_m(lat1: float, lon1: float, lat2: float, lon2: float,
                radius: float = 6371000.0) -> float:
    """Great-circle distance in meters (classic haversine)."""
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp = p2 - p1
    dl = math.radians(lon2 - lon1)
    a = math.sin(dp / 2.0) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2.0) ** 2
    return 2.0 * radius * math.asin(math.sqrt(a))


# ---------------------------------------------------------------------------
# grid shortest path, the slow honest way


def dijkstra_grid_cost(
    world_map: WorldMap, start: LocalPoint, goal: LocalPoint, cell: float
) -> Optional[float]:
    """Exact shortest grid-path cost between the cells holding start/goal.

    Same problem definition as the package router: cells are centers of a
    ceil-sized lattice over the map bounds, a cell is blocked when its center
    lies within half a cell of a no-fly polygon, moves are 8-connected with
    no corner cutting, and cost counts straight and diagonal steps
    geometrically. Returns None when either endpoint is unusable or the goal
    is unreachable. No heuristic anywhere; plain uniform-cost search.
    """
    b = world_map.bounds
    nx = max(1, int(math.ceil((b.x_max - b.x_min) / cell)))
    ny = max(1, int(math.ceil((b.y_max - b.y_min) / cell)))

    zones = [Polygon([(p.x, p.y) for p in ring]).buffer(0.5 * cell)
             for ring in world_map.no_fly_zones]

    def blocked(i: int, j: int) -> bool:
        cx = b.x_min + (i + 0.5) * cell
        cy = b.y_min + (j + 0.5) * cell
        return any(shapely.intersects_xy(z, cx, cy) for z in zones)

    def snap(p: LocalPoint) -> Optional[tuple[int, int]]:
        i = int((p.x - b.x_min) // cell)
        j = int((p.y - b.y_min) // cell)
        if 0 <= i < nx and 0 <= j < ny:
            return i, j
        return None

    s = snap(start)
    g = snap(goal)
    if s is None or g is None or blocked(*s) or blocked(*g):
        return None

    # (straight_steps, diag_steps) per settled cell; cost derives from these
    # so the comparison against the package is exact, not epsilon-based
    dist: dict[tuple[int, int], tuple[int, int]] = {s: (0, 0)}
    done: set[tuple[int, int]] = set()
    heap: list[tuple[float, int, int, int]] = [(0.0, 0, s[0], s[1])]
    tie = 0
    block_cache: dict[tuple[int, int], bool] = {}

    def is_blocked(i: int, j: int) -> bool:
        key = (i, j)
        if key not in block_cache:
            block_cache[key] = blocked(i, j)
        return block_cache[key]

    while heap:
        cost, _, i, j = heapq.heappop(heap)
        if (i, j) in done:
            continue
        done.add((i, j))
        if (i, j) == g:
            st, dg = dist[(i, j)]
            return st * cell + dg * (cell * SQRT2)
        st, dg = dist[(i, j)]
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                if di == 0 and dj == 0:
                    continue
                ni, nj = i + di, j + dj
                if not (0 <= ni < nx and 0 <= nj < ny):
                    continue
                if is_blocked(ni, nj):
                    continue
                diagonal = di != 0 and dj != 0
                if diagonal and (is_blocked(i + di, j) or is_blocked(i, j + dj)):
                    continue
                nst, ndg = (st, dg + 1) if diagonal else (st + 1, dg)
                ncost = nst * cell + ndg * (cell * SQRT2)
                old = dist.get((ni, nj))
                if old is None or ncost < old[0] * cell + old[1] * (cell * SQRT2):
                    dist[(ni, nj)] = (nst, ndg)
                    tie += 1
                    heapq.heappush(heap, (ncost, tie, ni, nj))
    return None


# ---------------------------------------------------------------------------
# greedy shot assignment replay


def _shot_endpoints(a: ShootingAction, origin) -> tuple[LocalPoint, LocalPoint]:
    rail = Polyline([geo_to_local(p, origin) for p in a.rt_path])

    def at(t: float) -> LocalPoint:
        s = a.rt_speed * t
        offset, _ = shot_offset(a.shot_type, a.params, t, a.duration)
        return rail.point_at(s) + rotate_z(offset, rail.heading_at(s))

    return at(0.0), at(a.duration)


def _smooth_route_len(world_map: WorldMap, frm: LocalPoint, to: LocalPoint,
                      cell: float) -> Optional[float]:
    try:
        path = astar_path(world_map, frm, to, cell=cell, smooth=True)
    except NoPathError:
        return None
    return sum(p.distance_to(q) for p, q in zip(path, path[1:]))


def _return_leg_time(world_map: WorldMap, frm: LocalPoint, cell: float,
                     max_speed: float) -> float:
    stations = sorted(world_map.base_stations, key=lambda s: (frm - s).norm_2d())
    for st in stations:
        n = _smooth_route_len(world_map, frm, st.with_z(frm.z), cell)
        if n is not None:
            return n / max_speed
    return 0.0


def estimate_windows(mission: Mission, now: float,
                     fired: dict[str, float]) -> dict[str, dict]:
    """Per-shot window dicts {start, end, chained_to, event_fired}."""
    out: dict[str, dict] = {}
    prev_id = None
    prev_end = now
    for s in mission.shots:
        chained_to = None
        if s.start_event is not None:
            if s.start_event in fired:
                start, event_fired = max(now, fired[s.start_event]), True
            else:
                start, event_fired = mission.event_estimates.get(s.start_event, now), False
        else:
            start, event_fired = prev_end, False
            chained_to = prev_id
        out[s.id] = {"start": start, "end": start + s.duration,
                     "chained_to": chained_to, "event_fired": event_fired}
        prev_id = s.id
        prev_end = out[s.id]["end"]
    return out


def oracle_replan_assignments(
    mission: Mission,
    world_map: WorldMap,
    record,
    specs: dict,
    slack: float = 10.0,
    cell: float = 2.0,
    transit_alt: float = 15.0,
) -> tuple[dict[str, str], set[str]]:
    """Replay one re-planning pass from a ReplanRecord snapshot.

    ``specs`` maps drone_id -> DroneSpec. Returns (assignments, uncovered
    shot ids) computed from scratch: the reduced instance, the window
    estimates, the anchored continuations, and the greedy admission rules
    are all rebuilt here and must land on exactly what the station did.
    """
    removed = set(record.completed) | set(record.executing) | set(record.expired)
    reduced = [s for s in mission.shots if s.id not in removed]
    reduced_ids = {s.id for s in reduced}
    by_id = {s.id: s for s in mission.shots}

    windows = estimate_windows(mission, record.t, record.fired)
    for s in reduced:
        w = windows[s.id]
        if w["chained_to"] is not None and w["chained_to"] not in reduced_ids:
            w["chained_to"] = None

    # continuations of a shot still flying stay behind its predicted end
    for sid, did in sorted(record.executing.items()):
        if did not in record.healthy:
            continue
        idx = next(i for i, s in enumerate(mission.shots) if s.id == sid)
        t = record.states[did].available_at
        for s in mission.shots[idx + 1:]:
            if s.start_event is not None:
                break
            w = windows[s.id]
            w["start"] = max(w["start"], t)
            w["end"] = w["start"] + s.duration
            t = w["end"]

    ledger = {
        did: {
            "position": record.states[did].position,
            "available_at": record.states[did].available_at,
            "airborne": record.states[did].airborne,
            "budget": (record.states[did].budget_left
                       if record.states[did].budget_left is not None
                       else specs[did].flight_time_budget),
            "intervals": [],
        }
        for did in record.healthy
    }

    assignments: dict[str, str] = {}
    uncovered: set[str] = set()
    order = sorted(range(len(reduced)), key=lambda i: (windows[reduced[i].id]["start"], i))
    for i in order:
        shot = reduced[i]
        win = windows[shot.id]
        if shot.rt_mode is RTMode.ACTUAL_TARGET and not shot.rt_path:
            uncovered.add(shot.id)
            continue
        start_pos, end_pos = _shot_endpoints(shot, mission.origin)

        forced = record.anchors.get(shot.id)
        if forced is None and win["chained_to"] is not None:
            forced = assignments.get(win["chained_to"])
            if forced is None:
                uncovered.add(shot.id)
                continue
        if forced is not None and forced not in ledger:
            uncovered.add(shot.id)
            continue

        candidates = [forced] if forced else sorted(ledger)
        must_wait = shot.start_event is not None and not win["event_fired"]
        best = None
        best_key = None
        best_start = 0.0
        for did in candidates:
            led = ledger[did]
            n = _smooth_route_len(world_map, led["position"], start_pos, cell)
            if n is None:
                continue
            travel = n / specs[did].max_speed
            if not led["airborne"]:
                travel += transit_alt / (0.5 * specs[did].max_speed)
            arrival = led["available_at"] + travel
            if must_wait:
                if forced is None and arrival > win["start"] - slack:
                    continue
                actual = win["start"]
            else:
                actual = max(arrival, win["start"])
            end = actual + shot.duration
            if any(a < end and actual < b for a, b in led["intervals"]):
                continue
            ret = _return_leg_time(world_map, end_pos, cell, specs[did].max_speed)
            if end + ret - record.t > led["budget"]:
                continue
            key = (led["available_at"], did)
            if best_key is None or key < best_key:
                best, best_key, best_start = did, key, actual
        if best is None:
            uncovered.add(shot.id)
            continue

        led = ledger[best]
        led["intervals"].append((best_start, best_start + shot.duration))
        led["position"] = end_pos
        led["available_at"] = best_start + shot.duration
        led["airborne"] = True
        assignments[shot.id] = best
        win["start"], win["end"] = best_start, best_start + shot.duration
        # realized delays push down the chain of event-less successors
        prev_end = win["end"]
        idx = next(k for k, s in enumerate(reduced) if s.id == shot.id)
        for s in reduced[idx + 1:]:
            w = windows[s.id]
            if w["chained_to"] is None:
                break
            if w["start"] < prev_end:
                w["start"] = prev_end
                w["end"] = prev_end + by_id[s.id].duration
            prev_end = w["end"]
    return assignments, uncovered
