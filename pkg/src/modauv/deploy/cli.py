"""Command line entry point.

Exit status: 0 when the mission reaches DONE, 1 when it ends anywhere else
(ABORT or out of time), 2 for invalid scenarios or usage, 3 when a replay
does not reproduce the recorded logs.
"""
from __future__ import annotations

import argparse
import json
import sys
import tempfile
from pathlib import Path

from .config import ConfigError, build, list_scenarios, load_scenario
from .logs import STREAMS, read_log
from .runner import run_scenario

EXIT_DONE, EXIT_NOT_DONE, EXIT_INVALID, EXIT_MISMATCH = 0, 1, 2, 3


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="modauv", description="Modular AUV simulation harness")
    sub = p.add_subparsers(dest="cmd", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, help="override the scenario seed")
        sp.add_argument("--duration", type=float, help="override the run length [s]")
        sp.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                        help="set a dotted config field, value parsed as YAML (repeatable)")

    r = sub.add_parser("run", help="run a scenario and write logs, report and figures")
    r.add_argument("scenario", help="scenario file, or the name of a shipped scenario")
    common(r)
    r.add_argument("--out", help="output directory (default runs/<scenario>)")
    r.add_argument("--no-figures", action="store_true", help="skip the matplotlib figures")

    v = sub.add_parser("validate", help="check a scenario file without running it")
    v.add_argument("scenario")
    common(v)

    rp = sub.add_parser("replay", help="re-run a recorded run and check its logs reproduce")
    rp.add_argument("log", help="run directory, or any .jsonl log inside one")
    rp.add_argument("--out", help="write the replayed logs and figures here")

    sub.add_parser("list-scenarios", help="list shipped scenarios")
    return p


def _summary(report) -> str:
    err = report.max_radial_error
    err = "n/a" if err is None else f"{err:.3f} m"
    line = (f"{report.scenario} seed={report.seed}: {report.outcome} "
            f"captures {report.n_captures}/{report.captures_planned}, max radial error {err}, "
            f"t={report.sim_time:.2f} s")
    if report.abort_reason:
        line += f" ({report.abort_reason})"
    return line


def _exit_for(report) -> int:
    return EXIT_DONE if report.outcome == "DONE" else EXIT_NOT_DONE


def cmd_run(args) -> int:
    cfg = load_scenario(args.scenario, args.override, args.seed, args.duration)
    out = Path(args.out) if args.out else Path("runs") / cfg.name
    report = run_scenario(cfg, out, figures=not args.no_figures)
    print(_summary(report))
    print(f"logs written to {out}")
    return _exit_for(report)


def cmd_validate(args) -> int:
    cfg = load_scenario(args.scenario, args.override, args.seed, args.duration)
    print(f"{cfg.name}: ok ({len(cfg.vehicle.thrusters)} thrusters, {len(cfg.faults)} fault events, "
          f"config sha256 {cfg.digest()[:12]})")
    return EXIT_DONE


def cmd_replay(args) -> int:
    src = Path(args.log)
    run_dir = src if src.is_dir() else src.parent
    header, _ = read_log(run_dir / "trajectory.jsonl")
    recorded = json.loads((run_dir / "report.json").read_text())
    data = dict(header["config"])
    data["seed"] = recorded["seed"]
    cfg = build(data)
    if args.out:
        out = Path(args.out)
        report = run_scenario(cfg, out, figures=True)
        status = _compare(run_dir, out)
    else:
        with tempfile.TemporaryDirectory() as tmp:
            report = run_scenario(cfg, tmp)
            status = _compare(run_dir, Path(tmp))
    print(_summary(report))
    if status:
        print("replay differs from the recording: " + ", ".join(status))
        return EXIT_MISMATCH
    print("replay reproduces the recorded logs exactly")
    return _exit_for(report)


def _compare(a: Path, b: Path) -> list[str]:
    bad = []
    for s in STREAMS:
        if (a / f"{s}.jsonl").read_bytes() != (b / f"{s}.jsonl").read_bytes():
            bad.append(s)
    return bad


def cmd_list(args) -> int:
    for name in list_scenarios():
        print(name)
    return EXIT_DONE


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    handler = {"run": cmd_run, "validate": cmd_validate, "replay": cmd_replay,
               "list-scenarios": cmd_list}[args.cmd]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
