import json
import subprocess
import sys

import pytest

from conftest import FIXTURES
from tetherplan.cli import main


def scenario(tmp_path, name="single_15.txt", **extra):
    data = {"map": str(FIXTURES / name), "radius": 0, "base": [7, 1], "tether_length": 30, "goals": [[7, 13], [1, 7], [13, 7]]}
    data.update(extra)
    p = tmp_path / "scenario.json"
    p.write_text(json.dumps(data))
    return p


def run(tmp_path, *args, **extra):
    sc = scenario(tmp_path, **extra)
    out = tmp_path / "out.json"
    code = main([args[0], "--scenario", str(sc), "--out", str(out), *args[1:]])
    return code, (json.loads(out.read_text()) if out.exists() else None)


@pytest.mark.parametrize("command", ["tmv", "ttsp"])
def test_multi_goal_commands(tmp_path, command):
    code, res = run(tmp_path, command)
    assert code == 0 and res["status"] == "ok"
    assert res["path"][0] == [7, 1] and res["path"][-1] == [7, 1]
    assert [g["n_configs"] for g in res["per_goal"]] == [2, 2, 2]
    assert set(res["timings_ms"]) == {"gcp_ms", "ups_ms", "combinatorial_ms", "total_ms"}
    assert res["ups_calls"] == (8 if command == "tmv" else 24)


def test_tp_command(tmp_path):
    code, res = run(tmp_path, "tp", goals=[[13, 7]], start={"cell": [1, 7], "index": 0})
    assert code == 0
    assert res["path"] == [[1, 7], [5, 4], [9, 4], [13, 7]]
    assert res["total_length"] == pytest.approx(14.0)


def test_reconfigure_command(tmp_path):
    code, res = run(tmp_path, "reconfigure", start={"cell": [1, 7], "index": 0}, target={"cell": [1, 7], "index": 1})
    assert code == 0
    assert res["path"][0] == [1, 7] and res["path"][-1] == [1, 7]
    assert res["min_required_tether"] == pytest.approx(18.605551275463988)


def test_verify_commands(tmp_path):
    code, res = run(tmp_path, "verify-convexity", "--samples", "40", "--seed", "3")
    assert code == 0 and res["pairs"] == 40 and res["violations"] == []
    code, res = run(tmp_path, "verify-oracle", "--samples", "20", start={"cell": [1, 7], "index": 1})
    assert code == 0 and res["status"] == "ok"
    assert all(g["sets_equal"] and g["lengths_equal"] for g in res["goals"])


def test_workspace_stats(tmp_path):
    code, res = run(tmp_path, "workspace-stats", tether_length=60)
    assert code == 0 and res["workspace_nodes"] == 431
    assert [g["n_configs"] for g in res["per_goal"]] == [2, 2, 2]


def test_unreachable_exit_codes(tmp_path):
    kwargs = dict(name="two_blocks_20.txt", base=[1, 1], goals=[[18, 18], [10, 10]], tether_length=25)
    code, res = run(tmp_path, "tmv", **kwargs)
    assert code == 0 and res["skipped"] == [[18, 18]]
    code, res = run(tmp_path, "tmv", "--on-unreachable", "fail", **kwargs)
    assert code == 2 and res == {"status": "unreachable", "unreachable": [[18, 18]]}
    code, _ = run(tmp_path, "tp", name="two_blocks_20.txt", base=[1, 1], goals=[[18, 18]], tether_length=25)
    assert code == 2


def test_usage_errors(tmp_path):
    assert main([]) == 1
    assert main(["tmv", "--scenario", str(tmp_path / "missing.json")]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"map": str(FIXTURES / "single_15.txt"), "base": [7, 1]}))
    assert main(["tmv", "--scenario", str(bad)]) == 1
    assert run(tmp_path, "tmv", base=[7, 7])[0] == 1
    assert run(tmp_path, "tmv", goals=[[99, 0]])[0] == 1
    assert run(tmp_path, "tmv", tether_length=-3)[0] == 1
    garbage = tmp_path / "garbage.txt"
    garbage.write_text("..x\n")
    assert run(tmp_path, "tmv", map=str(garbage))[0] == 1


def test_svg_is_deterministic_and_rerenders(tmp_path):
    sc = scenario(tmp_path)
    svgs = []
    for k in range(2):
        out, svg = tmp_path / f"r{k}.json", tmp_path / f"r{k}.svg"
        assert main(["tmv", "--scenario", str(sc), "--out", str(out), "--svg", str(svg)]) == 0
        svgs.append(svg.read_bytes())
    assert svgs[0] == svgs[1]
    again = tmp_path / "again.svg"
    assert main(["render", "--scenario", str(sc), "--result", str(tmp_path / "r0.json"), "--svg", str(again)]) == 0
    assert again.read_bytes() == svgs[0]
    text = svgs[0].decode()
    assert text.startswith("<svg") and 'stroke="blue"' in text and 'fill="red"' in text


def test_stdout_and_log_env(tmp_path):
    sc = scenario(tmp_path)
    proc = subprocess.run(
        [sys.executable, "-m", "tetherplan", "tmv", "--scenario", str(sc)],
        capture_output=True,
        text=True,
        env={"TETHERPLAN_LOG": "info", "PATH": ""},
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["status"] == "ok"
    assert "INFO" in proc.stderr


def test_tp_empty_map_is_straight(tmp_path):
    out, svg = tmp_path / "r.json", tmp_path / "r.svg"
    sc = scenario(tmp_path, name="empty_15.txt", base=[0, 0], goals=[[12, 5]], tether_length=20)
    assert main(["tp", "--scenario", str(sc), "--out", str(out), "--svg", str(svg)]) == 0
    res = json.loads(out.read_text())
    assert res["path"] == [[0, 0], [12, 5]]
    assert res["total_length"] == pytest.approx(13.0)
    assert svg.read_text().count('stroke="blue"') == 1
