import json
import subprocess
import sys

import pytest

from modauv.deploy.cli import EXIT_DONE, EXIT_INVALID, EXIT_MISMATCH, EXIT_NOT_DONE, main


def test_list_scenarios(capsys):
    assert main(["list-scenarios"]) == EXIT_DONE
    out = capsys.readouterr().out.split()
    assert "orbit_tethered" in out and "cell_uv_fault" in out


def test_validate_ok_and_invalid(capsys):
    assert main(["validate", "orbit_tethered"]) == EXIT_DONE
    assert main(["validate", "orbit_tethered", "--override", "dt=0.1"]) == EXIT_INVALID
    assert "dt: must not exceed 0.05 s" in capsys.readouterr().err
    assert main(["validate", "no_such_scenario"]) == EXIT_INVALID


def test_validate_scenario_file(tmp_path):
    f = tmp_path / "mine.yaml"
    f.write_text("base: orbit_tethered\nseed: 4\nmission: {n_captures: 4}\n")
    assert main(["validate", str(f)]) == EXIT_DONE
    f.write_text("base: orbit_tethered\nmission: {n_captures: 0}\n")
    assert main(["validate", str(f)]) == EXIT_INVALID


@pytest.fixture(scope="module")
def done_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    rc = main(["run", "orbit_tethered", "--seed", "3", "--out", str(out)])
    return rc, out


def test_run_writes_logs_report_and_figures(done_run):
    rc, out = done_run
    assert rc == EXIT_DONE
    for name in ("trajectory.jsonl", "power.jsonl", "bus.jsonl", "events.jsonl", "captures.jsonl",
                 "report.json", "trajectory.png", "power.png"):
        assert (out / name).stat().st_size > 0, name
    rep = json.loads((out / "report.json").read_text())
    assert rep["seed"] == 3 and rep["outcome"] == "DONE"


def test_replay_reproduces(done_run, tmp_path):
    _, out = done_run
    assert main(["replay", str(out / "trajectory.jsonl")]) == EXIT_DONE
    assert main(["replay", str(out), "--out", str(tmp_path)]) == EXIT_DONE
    assert (tmp_path / "trajectory.png").exists()


def test_replay_detects_tampering(done_run, tmp_path):
    _, out = done_run
    copy = tmp_path / "copy"
    copy.mkdir()
    for f in out.iterdir():
        (copy / f.name).write_bytes(f.read_bytes())
    lines = (copy / "power.jsonl").read_text().splitlines()
    lines[-1] = lines[-1].replace("0", "1", 1)
    (copy / "power.jsonl").write_text("\n".join(lines) + "\n")
    assert main(["replay", str(copy)]) == EXIT_MISMATCH


def test_abort_exits_nonzero(tmp_path):
    assert main(["run", "cell_uv_fault", "--out", str(tmp_path), "--no-figures"]) == EXIT_NOT_DONE


def test_timeout_exits_nonzero(tmp_path):
    assert main(["run", "orbit_tethered", "--duration", "2", "--out", str(tmp_path), "--no-figures"]) == EXIT_NOT_DONE


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "modauv.deploy.cli", "list-scenarios"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "orbit_tethered" in r.stdout
    r = subprocess.run([sys.executable, "-m", "modauv.deploy.cli", "bogus"], capture_output=True, text=True)
    assert r.returncode == 2
