import json

import pytest

from geowl.generate import FamilySpec, random_cloud, transform_cloud
from geowl.search import SearchConfig, evaluate_pair, run_search
from geowl.geometry import DEFAULT_TOL

HEXAGON = [[-1, -1, 0], [-1, 0, -1], [0, -1, -1], [0, 1, 1], [1, 0, 1], [1, 1, 0]]
CHAIR = [[-1, -1, 0], [-1, 0, -1], [0, 1, -1], [0, -1, 1], [1, 0, 1], [1, 1, 0]]


def _exchange_config(budget, **kw):
    family = FamilySpec("exchange", 8, 0, {"n_min": 5, "n_max": 8})
    return SearchConfig(variants=["2wl", "3fwl"], family=family, trials=10**6, budget=budget, **kw)


def test_config_round_trip():
    cfg = _exchange_config(1234, seed=7, eps=1e-5)
    again = SearchConfig.loads(cfg.dumps())
    assert again == cfg
    assert again.dumps() == cfg.dumps()


def test_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(variants=[])
    with pytest.raises(ValueError):
        SearchConfig(trials=-1)
    with pytest.raises(ValueError):
        SearchConfig(eps=0)
    with pytest.raises(ValueError):
        SearchConfig.from_dict({"variants": ["2wl"], "colour": 3})
    with pytest.raises(ValueError):
        SearchConfig(variants=["4wl"])


def test_zero_trials_empty_report():
    report = run_search(SearchConfig(trials=0))
    assert report.records == [] and report.summary()["trials_tested"] == 0


def test_random_pairs_no_3fwl_counterexample():
    cfg = SearchConfig(variants=["3fwl"], family=FamilySpec("random", 6), trials=100, seed=3)
    report = run_search(cfg)
    assert len(report.records) == 100
    assert report.summary()["counterexamples_per_variant"] == {"3fwl": 0}
    assert all(r.oracle == "non-congruent" for r in report.records)


def test_transformed_pairs_are_congruent():
    family = FamilySpec("random", 5, params={"pairing": "transformed"})
    report = run_search(SearchConfig(variants=["2wl"], family=family, trials=10))
    assert all(r.oracle == "congruent" and r.fingerprints_equal["2wl"] for r in report.records)
    assert not report.counterexamples


def test_hexagon_pair_is_2wl_counterexample():
    from geowl.geometry import PointCloud

    equal, oracle, verdict, basis = evaluate_pair(
        PointCloud(HEXAGON), PointCloud(CHAIR), ["2wl", "2fwl", "3wl", "3fwl"], DEFAULT_TOL
    )
    assert oracle == "non-congruent" and basis == "refined"
    assert verdict["2wl"]
    assert not verdict["3fwl"]


def test_exchange_campaign_small_budget():
    report = run_search(_exchange_config(400))
    summary = report.summary()
    assert summary["budget_exhausted"] and summary["constructions"] == 400
    assert summary["counterexamples_per_variant"]["2wl"] >= 1
    assert summary["counterexamples_per_variant"]["3fwl"] == 0
    for rec in report.counterexamples:
        assert rec.oracle == "non-congruent" and rec.fingerprints_equal["2wl"]
        assert rec.clouds is not None and rec.provenance["constructor"] == "relocating-exchange"


def test_campaign_deterministic(tmp_path):
    out = tmp_path / "r.json"
    a = run_search(_exchange_config(300, out=str(out))).to_dict()
    b = run_search(_exchange_config(300)).to_dict()
    a.pop("runtime_s"), b.pop("runtime_s")
    a["config"].pop("out"), b["config"].pop("out")
    assert a == b
    assert json.loads(out.read_text())["summary"] == a["summary"]


def test_swap_mode_runs():
    family = FamilySpec("exchange", 6, 0, {"n_min": 6, "n_max": 6, "mode": "swap"})
    report = run_search(SearchConfig(variants=["2wl"], family=family, trials=10**6, budget=200))
    s = report.summary()
    assert s["constructions"] == 200
    assert s["trials_tested"] + s["unrealizable"] == 200
