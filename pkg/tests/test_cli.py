import json

import pytest

from hardballs.cli import MISMATCH, NUMERIC, OK, USAGE, main, parse_range


def run(tmp_path, *argv):
    return main([*argv, "--out-dir", str(tmp_path)])


def test_parse_range():
    assert parse_range("3..5") == [3, 4, 5]
    assert parse_range("4") == [4]
    assert parse_range("3,6") == [3, 6]


def test_construct_n5(tmp_path, capsys):
    assert run(tmp_path, "construct", "--n", "5") == OK
    assert "N = 12" in capsys.readouterr().out
    manifest = json.loads((tmp_path / "construct_m4" / "manifest.json").read_text())
    for name in manifest["artifacts"]:
        assert (tmp_path / "construct_m4" / name).exists()
    assert manifest["outcome"]["N_genuine"] == 12


def test_construct_m1(tmp_path, capsys):
    assert run(tmp_path, "construct", "--m", "1") == OK
    assert "N = 1" in capsys.readouterr().out
    traj = json.loads((tmp_path / "construct_m1" / "trajectory.json").read_text())
    assert traj["events"] == ["0"] and traj["slopes"] == [["-1"], ["1"]]


def test_construct_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run(a, "construct", "--n", "4", "--seed", "5")
    run(b, "construct", "--n", "4", "--seed", "5")
    for name in ("genuine_trajectory.json", "matrices.json", "schedule.json"):
        assert (a / "construct_m3" / name).read_bytes() == (b / "construct_m3" / name).read_bytes()


def test_verify(tmp_path, capsys):
    assert run(tmp_path, "verify", "--n", "3") == OK
    out = capsys.readouterr().out
    assert "N_observed" in out and "yes" in out
    outcome = json.loads((tmp_path / "verify_n3" / "manifest.json").read_text())["outcome"]
    assert outcome["N_observed"] == 3 and outcome["match"]


def test_verify_mismatch_exit_code(tmp_path):
    # an absurdly small cap on the realization scale cannot match
    assert run(tmp_path, "verify", "--n", "4", "--max-events", "2") == MISMATCH


def test_bad_range_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as info:
        run(tmp_path, "verify", "--n", "3-5")
    assert info.value.code == USAGE


def test_cone_demo(tmp_path, capsys):
    assert run(tmp_path, "cone-demo", "--m", "4") == OK
    assert "15 collisions" in capsys.readouterr().out
    assert run(tmp_path, "cone-demo", "--m", "1") == OK


def test_cone_demo_bad_eps(tmp_path):
    assert run(tmp_path, "cone-demo", "--m", "3", "--eps", "2") == USAGE


def test_export(tmp_path):
    run(tmp_path, "cone-demo", "--m", "3")
    d = tmp_path / "cone_m3"
    assert main(["export", "--run", str(d), "--format", "csv"]) == OK
    assert (d / "export.csv").read_text() == (d / "events.csv").read_text()
    assert main(["export", "--run", str(d), "--format", "json"]) == OK
    data = json.loads((d / "export.json").read_text())
    assert len(data["trajectory"]) == 7


def test_export_unknown_format(tmp_path, capsys):
    with pytest.raises(SystemExit) as info:
        main(["export", "--run", str(tmp_path), "--format", "xml"])
    assert info.value.code == USAGE
    assert "csv" in capsys.readouterr().err


def test_rerun(tmp_path):
    run(tmp_path, "construct", "--m", "3")
    d = tmp_path / "construct_m3"
    before = (d / "genuine_trajectory.json").read_bytes()
    assert main(["rerun", str(d / "manifest.json")]) == OK
    assert (d / "genuine_trajectory.json").read_bytes() == before


def test_env_out_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("HARDBALLS_OUT", str(tmp_path / "env"))
    from hardballs.cli import build_parser
    args = build_parser().parse_args(["cone-demo", "--m", "2"])
    assert args.out_dir == str(tmp_path / "env")


def test_numeric_abort_code(tmp_path):
    # jitter too large to keep the collision order everywhere
    assert run(tmp_path, "construct", "--m", "4", "--jitter", "100") == NUMERIC
