"""Episode traces: JSONL records per control tick plus CSV exporters.

A trace line holds everything the gait-analysis exports need: time,
phase, stance, the 12 observations, a digest of the raw action, the 8
reward components and total, joint positions/velocities, and the
auxiliary reward inputs.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Iterable

import numpy as np

from .decoder import JOINT_NAMES
from .rewards import COMPONENT_NAMES


class TraceError(ValueError):
    """Trace file is missing or malformed."""


def action_digest(action: np.ndarray) -> str:
    return hashlib.sha256(np.asarray(action, dtype=float).tobytes()).hexdigest()[:16]


def trace_record(env, result, action) -> dict:
    """One JSONL record from a surrogate step result."""
    aux = result.aux
    return {
        "t": env.time,
        "tau": env.tau(),
        "stance": int(env.stance),
        "step_index": int(env.step_index),
        "obs": [float(v) for v in result.observation],
        "action_digest": action_digest(action),
        "reward": {
            "components": [float(c) for c in result.reward.components],
            "total": float(result.reward.total),
        },
        "q": [float(v) for v in env.q],
        "qd": [float(v) for v in env.qd],
        "aux": {
            "p_z": float(aux.p_z),
            "com_xy": [float(aux.com_xy[0]), float(aux.com_xy[1])],
            "d": float(aux.d),
            "d_feet": float(aux.d_feet),
            "u_norm": [float(v) for v in aux.u_norm],
            "angles": [float(v) for v in aux.angles],
            "rates": [float(v) for v in aux.rates],
            "support_polygon": [[float(a), float(b)] for a, b in aux.support_polygon],
        },
        "terminated": bool(result.terminated),
    }


class TraceWriter:
    def __init__(self, path: str | Path):
        self._fh = open(path, "w")

    def write(self, record: dict) -> None:
        self._fh.write(json.dumps(record) + "\n")

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_trace(path: str | Path) -> list[dict]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise TraceError(f"cannot read trace {path}: {exc}") from exc
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TraceError(f"{path}:{lineno}: invalid JSON: {exc.msg}") from exc
        if not isinstance(rec, dict) or "t" not in rec:
            raise TraceError(f"{path}:{lineno}: not a trace record")
        records.append(rec)
    return records


# ----------------------------------------------------------------------
# CSV exporters (plot-ready data)

def _require(records: list[dict], key: str) -> None:
    for i, r in enumerate(records):
        if key not in r:
            raise TraceError(f"record {i} lacks field {key!r}")


def export_limit_cycle(records: list[dict], joints: Iterable[str] | None = None):
    """(q, qd) pairs per joint: the limit-cycle phase portrait data."""
    names = list(joints) if joints else ["r_hip_pitch", "l_hip_pitch", "r_knee", "l_knee"]
    idx = []
    for n in names:
        if n not in JOINT_NAMES:
            raise TraceError(f"unknown joint {n!r}; valid: {', '.join(JOINT_NAMES)}")
        idx.append(JOINT_NAMES.index(n))
    _require(records, "q")
    _require(records, "qd")
    header = ["t"]
    for n in names:
        header += [f"{n}_q", f"{n}_qd"]
    rows = []
    for r in records:
        row = [r["t"]]
        for j in idx:
            row += [r["q"][j], r["qd"][j]]
        rows.append(row)
    return header, rows


def export_speed_track(records: list[dict]):
    """(t, measured average velocity, commanded velocity) per tick."""
    _require(records, "obs")
    header = ["t", "v_x_avg", "v_x_des", "v_y_avg", "v_y_des"]
    rows = [
        [r["t"], r["obs"][2], r["obs"][0], r["obs"][3], r["obs"][1]]
        for r in records
    ]
    return header, rows


def export_reward_components(records: list[dict]):
    """The eight reward components and total per tick."""
    _require(records, "reward")
    header = ["t", *COMPONENT_NAMES, "total"]
    rows = [
        [r["t"], *r["reward"]["components"], r["reward"]["total"]]
        for r in records
    ]
    return header, rows


EXPORT_KINDS = {
    "limit-cycle": export_limit_cycle,
    "speed-track": export_speed_track,
    "reward-components": export_reward_components,
}


def write_csv(path: str | Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(repr(v) if isinstance(v, float) else str(v) for v in row) + "\n")
