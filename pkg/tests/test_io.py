import json
import math

import numpy as np

from capflow.geometry import make_perturbed_cap
from capflow.io import read_csv, read_snapshot, write_csv, write_manifest, write_snapshot


def test_snapshot_roundtrip(tmp_path):
    c = make_perturbed_cap(3, math.pi / 3, 0.7, 2, 0.003, 50)
    p = write_snapshot(tmp_path / "s.json", c, 0.25)
    back, t = read_snapshot(p)
    assert t == 0.25 and back.n == 3 and back.theta == c.theta
    assert np.array_equal(back.r, c.r) and np.array_equal(back.z, c.z)
    assert set(json.loads(p.read_text())) == {"n", "theta", "t", "r", "z"}


def test_csv_roundtrip_and_precision(tmp_path):
    p = write_csv(tmp_path / "a.csv", ["x", "y"], [[1 / 3, math.pi], [2.0, -1e-300]], comment="hi")
    lines = p.read_text().splitlines()
    assert lines[0] == "# hi" and lines[1] == "x,y"
    assert lines[2] == "0.33333333333333331,3.1415926535897931"
    header, data = read_csv(p)
    assert header == ["x", "y"] and data[0, 0] == 1 / 3 and data[1, 1] == -1e-300


def test_atomic_writes_leave_no_temp(tmp_path):
    write_manifest(tmp_path, {"a": 1})
    write_manifest(tmp_path, {"a": 2})
    assert sorted(x.name for x in tmp_path.iterdir()) == ["manifest.json"]
    assert json.loads((tmp_path / "manifest.json").read_text()) == {"a": 2}
