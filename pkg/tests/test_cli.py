import pytest

from cineswarm.cli import build_parser, main
from cineswarm.model import Mission, serialize_mission
from cineswarm.worldmap import serialize_map

from .conftest import ORIGIN, lateral_shot, one_shot_mission, open_map


@pytest.fixture()
def files(tmp_path):
    m = one_shot_mission(
        lateral_shot(duration=3.0, start_event="GO"), estimates={"GO": 30.0},
    )
    mission = tmp_path / "mission.json"
    mission.write_bytes(serialize_mission(m))
    map_file = tmp_path / "map.json"
    map_file.write_bytes(serialize_map(open_map()))
    return str(mission), str(map_file)


# ------------------------------------------------------------------ parsing

def test_defaults():
    args = build_parser().parse_args(
        ["run", "--mission", "m.json", "--map", "w.json", "--drones", "2"],
    )
    assert args.seed == 0 and args.fire == [] and args.fail == []
    assert args.horizon is None and not args.realtime and args.listen is None


def test_fire_argument_forms():
    args = build_parser().parse_args(
        ["run", "--mission", "m", "--map", "w", "--drones", "1",
         "--fire", "GO@6", "--fire", "CUT@12.5"],
    )
    assert args.fire == [("GO", 6.0), ("CUT", 12.5)]


@pytest.mark.parametrize("bad", ["GO", "@5", "GO@", "GO@soon"])
def test_fire_argument_rejects(bad):
    with pytest.raises(SystemExit) as exc:
        build_parser().parse_args(
            ["run", "--mission", "m", "--map", "w", "--drones", "1", "--fire", bad],
        )
    assert exc.value.code == 2


def test_fail_argument_forms():
    args = build_parser().parse_args(
        ["run", "--mission", "m", "--map", "w", "--drones", "1",
         "--fail", "drone_1:low_battery@30"],
    )
    assert args.fail == [("drone_1", "low_battery", 30.0)]


@pytest.mark.parametrize("bad", ["drone_1@3", "drone_1:@3", ":gps@3", "drone_1:gps@x"])
def test_fail_argument_rejects(bad):
    with pytest.raises(SystemExit):
        build_parser().parse_args(
            ["run", "--mission", "m", "--map", "w", "--drones", "1", "--fail", bad],
        )


def test_subcommand_required():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


# --------------------------------------------------------------------- runs

def test_run_happy_path(files, tmp_path, capsys):
    mission, map_file = files
    trace = str(tmp_path / "out.jsonl")
    rc = main([
        "run", "--mission", mission, "--map", map_file, "--drones", "1",
        "--fire", "GO@6", "--trace", trace,
    ])
    assert rc == 0
    out = capsys.readouterr().out
    assert "finished at t=" in out
    assert "event GO fired at t=6.00s" in out
    assert "completed shots: ['s1']" in out
    assert "drone_1: phase=done" in out
    assert (tmp_path / "out.jsonl").exists()
    assert (tmp_path / "out.msgs.jsonl").exists()


def test_run_horizon_without_event(files, capsys):
    mission, map_file = files
    rc = main([
        "run", "--mission", mission, "--map", map_file, "--drones", "1",
        "--horizon", "8",
    ])
    assert rc == 0
    out = capsys.readouterr().out
    assert "finished at t=8.00s" in out
    assert "completed shots: none" in out


def test_run_missing_mission(files, capsys):
    _, map_file = files
    rc = main(["run", "--mission", "/nope.json", "--map", map_file, "--drones", "1"])
    assert rc == 2
    assert "cannot read mission" in capsys.readouterr().err


def test_run_invalid_mission(files, tmp_path, capsys):
    _, map_file = files
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    rc = main(["run", "--mission", str(bad), "--map", map_file, "--drones", "1"])
    assert rc == 2
    assert "mission invalid" in capsys.readouterr().err


def test_run_invalid_map(files, tmp_path, capsys):
    mission, _ = files
    bad = tmp_path / "badmap.json"
    bad.write_text("[1,2]")
    rc = main(["run", "--mission", mission, "--map", str(bad), "--drones", "1"])
    assert rc == 2
    assert "map invalid" in capsys.readouterr().err


def test_run_needs_a_drone(files, capsys):
    mission, map_file = files
    rc = main(["run", "--mission", mission, "--map", map_file, "--drones", "0"])
    assert rc == 2
    assert "at least 1" in capsys.readouterr().err


def test_run_unknown_fail_target(files, capsys):
    mission, map_file = files
    rc = main([
        "run", "--mission", mission, "--map", map_file, "--drones", "1",
        "--fail", "drone_9:low_battery@3",
    ])
    assert rc == 2
    assert "unknown drone" in capsys.readouterr().err


def test_run_refuses_conflicting_mission(files, tmp_path, capsys):
    _, map_file = files
    m = Mission(
        origin=ORIGIN,
        shots=[lateral_shot("dup"), lateral_shot("dup")],
        event_estimates={},
    )
    mission = tmp_path / "dup.json"
    mission.write_bytes(serialize_mission(m))
    rc = main(["run", "--mission", str(mission), "--map", map_file, "--drones", "1"])
    assert rc == 3
    assert "mission refused" in capsys.readouterr().err


def test_run_injected_failure_summary(files, capsys):
    mission, map_file = files
    rc = main([
        "run", "--mission", mission, "--map", map_file, "--drones", "1",
        "--fire", "GO@20", "--fail", "drone_1:low_battery@4",
    ])
    assert rc == 0
    out = capsys.readouterr().out
    assert "drone_1: phase=emergency" in out
    assert "completed shots: none" in out
