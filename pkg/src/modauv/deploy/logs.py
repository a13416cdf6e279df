"""Line-delimited JSON logs, one record per tick per stream.

Every file starts with a header record echoing the scenario (without the
seed) so runs that differ only in seed share identical headers.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

STREAMS = ("trajectory", "power", "bus", "captures", "events")

SCHEMAS = {
    "trajectory": ["t", "phase", "pos", "quat", "vel", "omega", "est_pos", "est_yaw", "site", "thrust", "target"],
    "power": ["t", "cells", "pack_amps", "bms_fault", "fet_closed", "rail_volts", "rail_amps", "rail_mode"],
    "bus": ["t", "msgs", "can"],
    "captures": ["t", "azimuth", "position", "yaw", "bbox", "true_position", "radial_error"],
    "events": ["t", "event", "detail"],
}


def _clean(x):
    if isinstance(x, float):
        return x if math.isfinite(x) else None
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    return x


def dumps(record: dict) -> str:
    return json.dumps(_clean(record), separators=(",", ":"))


class LogSet:
    def __init__(self, scenario: str, echo: dict, digest: str):
        self.lines = {s: [] for s in STREAMS}
        for s in STREAMS:
            self.lines[s].append(dumps({
                "type": "header", "stream": s, "scenario": scenario, "fields": SCHEMAS[s],
                "config_sha256": digest, "config": echo,
            }))

    def write(self, stream: str, record: dict) -> None:
        self.lines[stream].append(dumps(record))

    def save(self, out_dir) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = []
        for s, lines in self.lines.items():
            p = out / f"{s}.jsonl"
            p.write_text("\n".join(lines) + "\n")
            paths.append(p)
        return paths


def read_log(path) -> tuple[dict, list[dict]]:
    with open(path) as fh:
        rows = [json.loads(line) for line in fh if line.strip()]
    if not rows or rows[0].get("type") != "header":
        raise ValueError(f"{path}: missing header record")
    return rows[0], rows[1:]
