"""Snapshots, CSV tables and run manifests, all written atomically."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import GeometryError
from .geometry import ProfileCurve


def fmt(v: float) -> str:
    return f"{float(v):.17g}"


def atomic_write_text(path: str | os.PathLike, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _json_number_list(values) -> str:
    return "[" + ", ".join(fmt(v) for v in values) + "]"


def snapshot_text(curve: ProfileCurve, t: float = 0.0) -> str:
    """JSON document ``{n, theta, t, r, z}`` with 17 significant digits."""
    return ("{\n"
            f'  "n": {curve.n},\n'
            f'  "theta": {fmt(curve.theta)},\n'
            f'  "t": {fmt(t)},\n'
            f'  "r": {_json_number_list(curve.r)},\n'
            f'  "z": {_json_number_list(curve.z)}\n'
            "}\n")


def write_snapshot(path, curve: ProfileCurve, t: float = 0.0) -> Path:
    return atomic_write_text(path, snapshot_text(curve, t))


def read_snapshot(path) -> tuple[ProfileCurve, float]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        curve = ProfileCurve(int(doc["n"]), float(doc["theta"]), np.array(doc["r"], dtype=float),
                             np.array(doc["z"], dtype=float), meta={"kind": "file", "source": str(path)})
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise GeometryError(f"cannot read snapshot {path}: {exc}") from exc
    return curve, float(doc.get("t", 0.0))


def csv_text(header, rows, comment: str | None = None) -> str:
    buf = io.StringIO()
    if comment:
        buf.write(f"# {comment}\n")
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for row in rows:
        wr.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path, header, rows, comment: str | None = None) -> Path:
    return atomic_write_text(path, csv_text(header, rows, comment))


def read_csv(path) -> tuple[list[str], np.ndarray]:
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines()
             if ln and not ln.startswith("#")]
    header = lines[0].split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]]) if len(lines) > 1 \
        else np.empty((0, len(header)))
    return header, data


def quermass_rows(qv, R: float = math.nan) -> tuple[list[str], list[list[float]]]:
    header = ["R", "alpha"] + [f"W{i}" for i in range(len(qv.W))]
    return header, [[R, qv.alpha, *qv.W]]


def write_manifest(directory, manifest: dict) -> Path:
    """Write ``manifest.json``; one per output directory."""
    return atomic_write_text(Path(directory) / "manifest.json",
                             json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
