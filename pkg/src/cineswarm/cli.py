"""Command line entry point.

    cineswarm run --mission m.json --map map.json --drones 2 \
        [--seed 7] [--realtime] [--listen 127.0.0.1:8765] \
        [--fire START_RACE@20] [--fail drone_1:low_battery@30] \
        [--trace out.jsonl]

Events only happen when fired: pass --fire (or connect a dashboard and use
its buttons) or the drones will hover at their wait points until the
session horizon.
"""

from __future__ import annotations

import argparse
import sys

from .groundstation import MissionStartError
from .model import MissionParseError, parse_mission
from .session import SessionConfig, SimSession, default_drones
from .worldmap import MapError, parse_map


def _fire_arg(s: str) -> tuple[str, float]:
    name, sep, at = s.partition("@")
    if not sep or not name:
        raise argparse.ArgumentTypeError(f"expected NAME@SECONDS, got {s!r}")
    try:
        return name, float(at)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad time in {s!r}")


def _fail_arg(s: str) -> tuple[str, str, float]:
    head, sep, at = s.partition("@")
    drone, sep2, kind = head.partition(":")
    if not sep or not sep2 or not drone or not kind:
        raise argparse.ArgumentTypeError(f"expected DRONE:KIND@SECONDS, got {s!r}")
    try:
        return drone, kind, float(at)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad time in {s!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cineswarm")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="execute a mission in the built-in world")
    run.add_argument("--mission", required=True, help="mission JSON file")
    run.add_argument("--map", required=True, dest="map_file", help="map JSON file")
    run.add_argument("--drones", required=True, type=int, help="fleet size")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--realtime", action="store_true",
                     help="pace the loop at wall-clock speed")
    run.add_argument("--listen", metavar="HOST:PORT",
                     help="serve the dashboard wire protocol on this address")
    run.add_argument("--fire", action="append", type=_fire_arg, default=[],
                     metavar="EVENT@T", help="fire an event at sim time T")
    run.add_argument("--fail", action="append", type=_fail_arg, default=[],
                     metavar="DRONE:KIND@T", help="inject a failure at sim time T")
    run.add_argument("--trace", metavar="OUT.JSONL",
                     help="write the execution trace (plus a .msgs.jsonl sidecar)")
    run.add_argument("--horizon", type=float, default=None,
                     help="stop at this sim time even if the mission is unfinished")
    return p


def cmd_run(args) -> int:
    try:
        with open(args.mission, "rb") as f:
            mission = parse_mission(f.read())
    except OSError as exc:
        print(f"cannot read mission: {exc}", file=sys.stderr)
        return 2
    except MissionParseError as exc:
        print(f"mission invalid: {exc}", file=sys.stderr)
        return 2
    try:
        with open(args.map_file, "rb") as f:
            world_map = parse_map(f.read())
    except OSError as exc:
        print(f"cannot read map: {exc}", file=sys.stderr)
        return 2
    except MapError as exc:
        print(f"map invalid: {exc}", file=sys.stderr)
        return 2

    if args.drones <= 0:
        print("--drones must be at least 1", file=sys.stderr)
        return 2

    cfg = SessionConfig(seed=args.seed, realtime=args.realtime)
    if args.horizon is not None:
        cfg.max_time = args.horizon
    drones = default_drones(args.drones, world_map)

    try:
        session = SimSession(mission, world_map, drones, cfg=cfg)
    except MissionStartError as exc:
        print(f"mission refused: {exc}", file=sys.stderr)
        return 3
    for name, t in args.fire:
        session.fire_at(name, t)
    for drone, kind, t in args.fail:
        try:
            session.fail_at(drone, kind, t)
        except ValueError as exc:
            print(str(exc), file=sys.stderr)
            return 2

    server = None
    if args.listen:
        from .server import DashboardServer

        host, _, port = args.listen.partition(":")
        server = DashboardServer(host or "127.0.0.1", int(port) if port else 0)
        session.attach_server(server)
        print(f"listening on {server.address[0]}:{server.address[1]}")

    try:
        session.run()
    finally:
        if server is not None:
            server.close()

    if args.trace:
        session.write_trace(args.trace)

    gs = session.ground
    print(f"finished at t={session.now:.2f}s")
    for name in sorted(gs.fired):
        print(f"  event {name} fired at t={gs.fired[name]:.2f}s")
    for did in sorted(session.agents):
        sched = session.agents[did].scheduler
        shots = [
            a.id for a in (sched.state.plan.actions if sched.state.plan else [])
            if hasattr(a, "shot_type")
        ]
        print(f"  {did}: phase={sched.state.phase.value} shots={shots}")
    done = sorted(gs.completed)
    print(f"  completed shots: {done if done else 'none'}")
    if gs.plan_result is not None and gs.plan_result.uncovered:
        for sid, reason in gs.plan_result.uncovered:
            print(f"  uncovered: {sid} ({reason})")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    return 2


if __name__ == "__main__":
    sys.exit(main())
