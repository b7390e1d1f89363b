#!/usr/bin/env python3
"""Replay the two-drone parkour scenario and print per-shot timing.

The START_RACE event fires at t=20 s; one drone covers the athlete line
(fly-through, then flyby), the other holds a static wide before a lateral
and a quarter orbit at the finish.
"""

from __future__ import annotations

import argparse
import pathlib
import sys

from cineswarm.cli import main as cli_main

HERE = pathlib.Path(__file__).resolve().parent
SCENARIOS = HERE.parent / "scenarios"


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--trace", default=None, help="write a JSONL trace here")
    ap.add_argument("--listen", default=None, help="expose the dashboard feed")
    args = ap.parse_args(argv)

    cli_args = [
        "run",
        "--mission", str(SCENARIOS / "parkour.json"),
        "--map", str(SCENARIOS / "parkour_map.json"),
        "--drones", "2",
        "--seed", str(args.seed),
        "--fire", "START_RACE@20",
    ]
    if args.trace:
        cli_args += ["--trace", args.trace]
    if args.listen:
        cli_args += ["--listen", args.listen, "--realtime"]
    return cli_main(cli_args)


if __name__ == "__main__":
    sys.exit(main())
