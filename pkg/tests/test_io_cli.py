import json
import subprocess
import sys

import numpy as np
import pytest

from geowl import io
from geowl.cli import main
from geowl.errors import ParseError
from geowl.generate import FamilySpec, random_cloud, symmetric_cloud, transform_cloud
from geowl.geometry import PointCloud
from geowl.refinement import FWL3, WL2, refine_to_stable

from test_search import CHAIR, HEXAGON


def _write(path, cloud):
    io.write_xyz(cloud, path)
    return str(path)


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, json.loads(out) if out.strip() else None


@pytest.mark.parametrize("text", [
    "",
    "x\n\n0 0 0\n",
    "2\n\n0 0 0\n",
    "1\n\n0 0 zero\n",
    "1\n\n0 0\n",
    "1\n\n0 nan 0\n",
    "2\ncomment\n0 0 0\n0 0 0\n",
    "0\n\n",
])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        io.parse_xyz(text)


def test_xyz_round_trip(tmp_path):
    cloud = random_cloud(FamilySpec("random", 7, 1))
    path = tmp_path / "c.xyz"
    io.write_xyz(cloud, path, comment="hello")
    again = io.read_xyz(path)
    assert np.array_equal(again.points, cloud.points) and again.comment == "hello"


def test_transcript_round_trip(tmp_path):
    t = refine_to_stable(random_cloud(FamilySpec("random", 5, 2)), FWL3)
    path = tmp_path / "t.json"
    io.write_transcript(t, path)
    again = io.read_transcript(path)
    assert again.fingerprint == t.fingerprint and again.rounds == t.rounds
    d = json.loads(path.read_text())
    d["colorings"][-1][0] += 1
    with pytest.raises(ParseError):
        io.transcript_from_dict(d)


def test_refine_deterministic(tmp_path, capsys):
    path = _write(tmp_path / "tet.xyz", PointCloud([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]]))
    code, a = _run(capsys, "refine", path, "--variant", "3fwl")
    _, b = _run(capsys, "refine", path)
    assert code == 0 and a["rounds"] >= 3 and a["fingerprint"] == b["fingerprint"]


def test_refine_parse_error(tmp_path, capsys):
    bad = tmp_path / "bad.xyz"
    bad.write_text("3\n\n0 0 0\n")
    code, payload = _run(capsys, "refine", bad)
    assert code == 2 and payload["error"] == "ParseError"


def test_compare_reflection(tmp_path, capsys):
    cloud = random_cloud(FamilySpec("random", 6, 3))
    a = _write(tmp_path / "a.xyz", cloud)
    b = _write(tmp_path / "b.xyz", transform_cloud(cloud, "reflection", axis=1))
    code, payload = _run(capsys, "compare", a, b)
    assert code == 0 and payload["oracle"] == "congruent"
    assert all(payload["fingerprints_equal"].values()) and not any(payload["counterexample"].values())


def test_compare_size_mismatch(tmp_path, capsys):
    a = _write(tmp_path / "a.xyz", random_cloud(FamilySpec("random", 5, 0)))
    b = _write(tmp_path / "b.xyz", random_cloud(FamilySpec("random", 6, 0)))
    code, payload = _run(capsys, "compare", a, b)
    assert code == 4 and payload["error"] == "SizeMismatch"


def test_compare_counterexample(tmp_path, capsys):
    a = _write(tmp_path / "a.xyz", PointCloud(HEXAGON))
    b = _write(tmp_path / "b.xyz", PointCloud(CHAIR))
    code, payload = _run(capsys, "compare", a, b, "--variant", "2wl", "--variant", "3fwl")
    assert code == 0 and payload["oracle"] == "non-congruent"
    assert payload["counterexample"] == {"2wl": True, "3fwl": False}


def test_reconstruct_round_trip(tmp_path, capsys):
    cloud = random_cloud(FamilySpec("random", 7, 4))
    _write(tmp_path / "c.xyz", cloud)
    code, _ = _run(capsys, "refine", tmp_path / "c.xyz", "--out", tmp_path / "t.json")
    assert code == 0
    code, payload = _run(capsys, "reconstruct", tmp_path / "t.json", "--xyz", tmp_path / "r.xyz")
    assert code == 0 and payload["certificate"]["fingerprint_match"]
    from geowl.geometry import congruent

    assert congruent(cloud, io.read_xyz(tmp_path / "r.xyz")) is not None


def test_reconstruct_wrong_variant(tmp_path, capsys):
    io.write_transcript(refine_to_stable(random_cloud(FamilySpec("random", 5, 0)), WL2), tmp_path / "t.json")
    code, payload = _run(capsys, "reconstruct", tmp_path / "t.json")
    assert code == 5 and "error" in payload


def test_search_zero_trials(capsys):
    code, payload = _run(capsys, "search", "--trials", "0")
    assert code == 0 and payload["summary"]["trials_tested"] == 0


def test_search_config_file(tmp_path, capsys):
    from geowl.search import SearchConfig

    cfg = SearchConfig(variants=["3fwl"], family=FamilySpec("random", 5), trials=5, seed=2)
    (tmp_path / "cfg.json").write_text(cfg.dumps())
    code, payload = _run(capsys, "search", "--config", tmp_path / "cfg.json", "--out", tmp_path / "r.json")
    assert code == 0 and payload["config"]["trials"] == 5
    assert json.loads((tmp_path / "r.json").read_text())["summary"]["trials_tested"] == 5
    (tmp_path / "bad.json").write_text('{"trials": 3, "bogus": 1}')
    code, _ = _run(capsys, "search", "--config", tmp_path / "bad.json")
    assert code == 2


def test_grouping_cli(tmp_path, capsys):
    path = _write(tmp_path / "sq.xyz", symmetric_cloud("square-pyramid", 6, 0))
    code, payload = _run(capsys, "grouping", path)
    assert code == 0 and payload["feasible_count"] >= 2 and payload["budget_status"] == "complete"
    code, _ = _run(capsys, "grouping", path, "--root", "0,0,1")
    assert code == 2


def test_tricks_cli(tmp_path, capsys):
    path = _write(tmp_path / "c.xyz", random_cloud(FamilySpec("random", 6, 0)))
    code, payload = _run(capsys, "tricks", path)
    assert code == 0 and payload["roots_analysed"] == 1


def test_module_entry_point(tmp_path):
    path = _write(tmp_path / "c.xyz", random_cloud(FamilySpec("random", 4, 0)))
    proc = subprocess.run([sys.executable, "-m", "geowl", "refine", path, "--variant", "2wl"], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["variant"] == "2wl"
