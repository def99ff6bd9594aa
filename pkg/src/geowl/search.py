"""Seeded counterexample campaigns.

A trial is one candidate pair of clouds.  It is a counterexample for a
variant when the two fingerprints are equal and the oracle says the clouds are
not congruent.

Cheap screen: every variant's round-1 histogram contains, through the
degenerate tuples ``(v, v)`` / ``(v, v, v)``, the multiset of per-node distance
profiles.  Exchange candidates whose profile multisets differ therefore have
different fingerprints under all four variants; they are counted as screened
out instead of being refined.
"""
from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .geometry import EXHAUSTIVE_LIMIT, PointCloud, Tolerance, congruent
from .generate import (
    FamilySpec,
    _profile_key,
    exchange_seeds,
    family_cloud,
    random_exact_transform,
    relocating_constructions,
    swap_constructions,
)
from .refinement import Variant, refine_to_stable


@dataclass
class SearchConfig:
    variants: list = field(default_factory=lambda: ["2wl"])
    family: FamilySpec = field(default_factory=lambda: FamilySpec("random", 6))
    trials: int = 100
    budget: int = 10**5
    eps: float = 1e-6
    out: Optional[str] = None
    seed: int = 0

    def __post_init__(self):
        self.variants = [Variant.parse(v).name for v in self.variants]
        if not self.variants:
            raise ValueError("at least one variant is required")
        if isinstance(self.family, dict):
            self.family = FamilySpec.from_dict(self.family)
        if self.trials < 0 or self.budget < 0:
            raise ValueError("trials and budget must be non-negative")
        if not self.eps > 0:
            raise ValueError("eps must be positive")

    def to_dict(self) -> dict:
        return {
            "variants": list(self.variants),
            "family": self.family.to_dict(),
            "trials": self.trials,
            "budget": self.budget,
            "eps": self.eps,
            "out": self.out,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SearchConfig":
        known = {"variants", "family", "trials", "budget", "eps", "out", "seed"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        return cls(**d)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "SearchConfig":
        return cls.from_dict(json.loads(text))


@dataclass
class TrialRecord:
    trial: int
    n: int
    fingerprints_equal: dict
    oracle: str  # "congruent", "non-congruent" or "skipped"
    counterexample: dict
    provenance: dict
    clouds: Optional[list] = None  # coordinates, kept for counterexamples only


@dataclass
class SearchReport:
    config: dict
    records: list = field(default_factory=list)
    constructions: int = 0
    screened_out: int = 0
    unrealizable: int = 0
    budget_exhausted: bool = False
    runtime_s: float = 0.0

    @property
    def counterexamples(self) -> list:
        return [r for r in self.records if any(r.counterexample.values())]

    def summary(self) -> dict:
        per_variant = {v: sum(r.counterexample[v] for r in self.records) for v in self.config["variants"]}
        return {
            "constructions": self.constructions,
            "trials_tested": len(self.records),
            "screened_out": self.screened_out,
            "unrealizable": self.unrealizable,
            "oracle_skipped": sum(r.oracle == "skipped" for r in self.records),
            "counterexamples_per_variant": per_variant,
            "budget_exhausted": self.budget_exhausted,
        }

    def to_dict(self) -> dict:
        records = sorted(self.records, key=lambda r: r.trial)
        return {
            "config": self.config,
            "summary": self.summary(),
            "records": [asdict(r) for r in records],
            "counterexamples": [asdict(r) for r in sorted(self.counterexamples, key=lambda r: r.trial)],
            "runtime_s": round(self.runtime_s, 3),
        }


def evaluate_pair(a: PointCloud, b: PointCloud, variants, tol: Tolerance, cache: Optional[dict] = None) -> tuple:
    """Per-variant fingerprint equality, the oracle verdict, and how equality was decided.

    The oracle runs first.  Fingerprints are invariant under congruence, so
    for a congruent pair equality is implied and refinement is skipped
    (``basis = "implied-by-congruence"``).  ``cache`` maps variant names to
    the already computed fingerprints of ``a``.
    """
    if a.n > EXHAUSTIVE_LIMIT:
        oracle = "skipped"
    else:
        oracle = "congruent" if congruent(a, b, tol) is not None else "non-congruent"
    if oracle == "congruent":
        equal = {v: True for v in variants}
        basis = "implied-by-congruence"
    else:
        cache = {} if cache is None else cache
        equal = {}
        for v in variants:
            if v not in cache:
                cache[v] = refine_to_stable(a, Variant.parse(v), tol).fingerprint
            equal[v] = refine_to_stable(b, Variant.parse(v), tol).fingerprint == cache[v]
        basis = "refined"
    verdict = {v: bool(equal[v] and oracle == "non-congruent") for v in variants}
    return equal, oracle, verdict, basis


def _record(report, trial, a, b, prov, tol, cache=None):
    equal, oracle, verdict, basis = evaluate_pair(a, b, report.config["variants"], tol, cache)
    clouds = [a.points.tolist(), b.points.tolist()] if any(verdict.values()) else None
    prov = dict(prov, equality_basis=basis)
    report.records.append(TrialRecord(trial, a.n, equal, oracle, verdict, prov, clouds))


def _plain_campaign(config: SearchConfig, report: SearchReport, tol: Tolerance) -> None:
    spec = config.family
    pairing = spec.params.get("pairing", "independent")
    rng = np.random.default_rng(config.seed)
    for k in range(config.trials):
        if report.constructions >= config.budget:
            report.budget_exhausted = True
            break
        report.constructions += 1
        s = int(rng.integers(2**31))
        a = family_cloud(FamilySpec(spec.family, spec.n, s, spec.params))
        if pairing == "transformed":
            b = random_exact_transform(a, np.random.default_rng(s + 1), translate=True)
        elif pairing == "independent":
            b = family_cloud(FamilySpec(spec.family, spec.n, s + 1, spec.params))
        else:
            raise ValueError(f"unknown pairing {pairing!r}")
        _record(report, k, a, b, {"family": spec.family, "seeds": [s, s + 1], "pairing": pairing}, tol)


def _exchange_campaign(config: SearchConfig, report: SearchReport, tol: Tolerance) -> None:
    spec = config.family
    n_min = int(spec.params.get("n_min", spec.n))
    n_max = int(spec.params.get("n_max", spec.n))
    mode = spec.params.get("mode", "relocate")
    margin = int(spec.params.get("margin", 1))
    if mode not in ("relocate", "swap"):
        raise ValueError(f"unknown exchange mode {mode!r}")
    trial = 0
    for seed_index, cloud in enumerate(exchange_seeds(n_min, n_max, config.seed, int(spec.params.get("extent", 3)))):
        if mode == "relocate":
            stream = relocating_constructions(cloud, margin)
        else:
            stream = swap_constructions(cloud, tol)
        key = None
        cache = {}
        for pair in stream:
            if report.constructions >= config.budget:
                report.budget_exhausted = True
                return
            if len(report.records) >= config.trials:
                return
            report.constructions += 1
            if pair is None:
                report.unrealizable += 1
                continue
            if mode == "relocate":
                key = key or _profile_key(cloud.points.astype(int))
                if _profile_key(pair.cloud_b.points.astype(int)) != key:
                    report.screened_out += 1
                    continue
            prov = dict(pair.provenance, seed_index=seed_index, construction=report.constructions)
            _record(report, trial, pair.cloud_a, pair.cloud_b, prov, tol, cache)
            trial += 1


def run_search(config: SearchConfig) -> SearchReport:
    """Run the configured campaign; deterministic for a fixed config."""
    tol = Tolerance(config.eps)
    report = SearchReport(config.to_dict())
    start = time.perf_counter()
    if config.family.family == "exchange":
        _exchange_campaign(config, report, tol)
    else:
        _plain_campaign(config, report, tol)
    report.runtime_s = time.perf_counter() - start
    if config.out:
        Path(config.out).write_text(json.dumps(report.to_dict(), indent=2))
    return report
