"""Search for a pair that (2,WL) cannot tell apart and check that (3,FWL) can."""
from geowl.generate import FamilySpec
from geowl.search import SearchConfig, run_search

family = FamilySpec("exchange", 8, params={"n_min": 5, "n_max": 8})
report = run_search(SearchConfig(variants=["2wl", "3fwl"], family=family, trials=10**9, budget=2000))
print(report.summary())

first = report.counterexamples[0]
print("provenance:", first.provenance)
for name, pts in zip("AB", first.clouds):
    print(name, pts)
print("fingerprints equal:", first.fingerprints_equal, "oracle:", first.oracle)
