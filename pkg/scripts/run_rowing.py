#!/usr/bin/env python3
"""Replay the regatta scenario: a 50 m lateral on a live GPS boat plus an
establishing pull-back along the course. The GO event fires at t=25 s."""

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
        "--mission", str(SCENARIOS / "rowing.json"),
        "--map", str(SCENARIOS / "rowing_map.json"),
        "--drones", "2",
        "--seed", str(args.seed),
        "--fire", "GO@25",
    ]
    if args.trace:
        cli_args += ["--trace", args.trace]
    if args.listen:
        cli_args += ["--listen", args.listen, "--realtime"]
    return cli_main(cli_args)


if __name__ == "__main__":
    sys.exit(main())
