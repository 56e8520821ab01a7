"""Artifact writers: CSV trajectories, JSON reports, gnuplot tables,
and the run manifest.

Every file a command writes is listed in ``manifest.json`` with its
SHA-256 content hash; reruns of the same config produce byte-identical
artifacts (floats are emitted with shortest round-trip repr).
"""

from __future__ import annotations

import hashlib
import json
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .sim import Trajectory

__all__ = ["write_trajectory_csv", "write_json", "write_dat", "Manifest"]


def _fmt(x: float) -> str:
    return repr(float(x))


def write_trajectory_csv(path: Path, traj: Trajectory, meta: dict,
                         columns: list[str] | None = None) -> None:
    """Trajectory dump: '#'-prefixed metadata lines, then T plus one
    column per state component."""
    states = np.atleast_2d(traj.states)
    if states.shape[0] != traj.times.size:
        states = states.T
    d = states.shape[1]
    if columns is None:
        columns = [f"mode_{k + 1}" for k in range(d)] if traj.kind == "field" \
            else [f"y_{k + 1}" for k in range(d)] if d > 1 else ["y"]
    lines = [f"# {k}: {v}" for k, v in sorted(meta.items())]
    if traj.stopped_at is not None:
        lines.append(f"# stopped_at: {_fmt(traj.stopped_at)}")
    lines.append(",".join(["T"] + columns))
    for r in range(traj.times.size):
        row = [_fmt(traj.times[r])] + [_fmt(v) for v in states[r]]
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")


def _jsonify(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, dict):
        return {k: _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(path: Path, doc: dict) -> None:
    Path(path).write_text(
        json.dumps(_jsonify(doc), indent=2, sort_keys=True) + "\n")


def write_dat(path: Path, header: list[str], rows) -> None:
    """Gnuplot-friendly whitespace table with a '#' column header."""
    lines = ["# " + "  ".join(header)]
    for row in rows:
        lines.append("  ".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    return h.hexdigest()


class Manifest:
    """Collects command provenance and output hashes for exact reruns."""

    def __init__(self, command: str, config_path: Path, seed: int,
                 backend: str):
        self.doc = {
            "schema_version": 1,
            "command": command,
            "config_path": str(config_path),
            "config_sha256": sha256_file(config_path),
            "seed": seed,
            "backend": backend,
            "versions": {
                "ampsde": __version__,
                "numpy": np.__version__,
                "python": platform.python_version(),
            },
            "outputs": {},
            "warnings": [],
        }

    def add_output(self, path: Path) -> None:
        self.doc["outputs"][Path(path).name] = sha256_file(path)

    def warn(self, message: str) -> None:
        self.doc["warnings"].append(message)
        print(f"warning: {message}", file=sys.stderr)

    def write(self, directory: Path) -> Path:
        path = Path(directory) / "manifest.json"
        write_json(path, self.doc)
        return path
