"""Command line front end: ``python -m geowl <subcommand>``.

Machine-readable JSON goes to stdout (or ``--out``), a one-line human summary
to stderr.  Exit codes: 0 success, 2 parse error, 3 engine error,
4 comparison precondition, 5 reconstruction error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io
from .errors import GeoWLError, ParseError, ReconstructionError, SizeMismatch
from .generate import FamilySpec
from .geometry import EXHAUSTIVE_LIMIT, Tolerance, congruent, distance_matrix
from .grouping import DEFAULT_BUDGET, analyse_rows, build_rows, rows_from_ticks, _root_tuple
from .reconstruct import reconstruct, trick_statistics
from .refinement import ALL_VARIANTS, FWL3, WL3, Variant, refine_to_stable
from .search import SearchConfig, run_search

EXIT_OK, EXIT_PARSE, EXIT_ENGINE, EXIT_PRECONDITION, EXIT_RECONSTRUCT = 0, 2, 3, 4, 5
VARIANT_NAMES = [v.name for v in ALL_VARIANTS]
GROUPING_MAX_N = 12


class CliFailure(Exception):
    def __init__(self, code: int, error: Exception):
        super().__init__(str(error))
        self.code = code
        self.error = error


def _emit(payload: dict, out: str = None) -> None:
    text = json.dumps(payload, indent=2, default=_json_default)
    if out:
        Path(out).write_text(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _json_default(x):
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not JSON serializable: {type(x).__name__}")


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


def _tol(args) -> Tolerance:
    return Tolerance(args.eps)


def cmd_refine(args) -> int:
    cloud = io.read_xyz(args.cloud)
    variant = Variant.parse(args.variant or "3fwl")
    try:
        t = refine_to_stable(cloud, variant, _tol(args))
    except GeoWLError as exc:
        raise CliFailure(EXIT_ENGINE, exc) from exc
    if args.out:
        io.write_transcript(t, args.out)
        _emit({"variant": variant.name, "n": t.n, "rounds": t.rounds, "digest": t.fingerprint.digest, "transcript": args.out})
    else:
        _emit(io.transcript_to_dict(t))
    _note(f"{variant.name}: n={t.n} rounds={t.rounds} digest={t.fingerprint.digest[:16]}")
    return EXIT_OK


def cmd_compare(args) -> int:
    a, b = io.read_xyz(args.a), io.read_xyz(args.b)
    tol = _tol(args)
    variants = [Variant.parse(v) for v in (args.variant or VARIANT_NAMES)]
    if a.n != b.n:
        raise CliFailure(EXIT_PRECONDITION, SizeMismatch(f"clouds have {a.n} and {b.n} points"))
    try:
        equal = {
            v.name: refine_to_stable(a, v, tol).fingerprint == refine_to_stable(b, v, tol).fingerprint
            for v in variants
        }
    except GeoWLError as exc:
        raise CliFailure(EXIT_ENGINE, exc) from exc
    if a.n > EXHAUSTIVE_LIMIT:
        oracle = "skipped"
    else:
        oracle = "congruent" if congruent(a, b, tol) is not None else "non-congruent"
    verdict = {v: bool(eq and oracle == "non-congruent") for v, eq in equal.items()}
    _emit({"n": a.n, "fingerprints_equal": equal, "oracle": oracle, "counterexample": verdict}, args.out)
    _note(f"oracle: {oracle}; equal fingerprints: {[v for v, e in equal.items() if e] or 'none'}")
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    t = io.read_transcript(args.transcript)
    try:
        rec = reconstruct(t, Tolerance(args.eps) if args.eps else None)
    except (GeoWLError, ValueError) as exc:
        raise CliFailure(EXIT_RECONSTRUCT, exc) from exc
    payload = {"certificate": rec.certificate}
    if args.xyz:
        io.write_xyz(rec.cloud, args.xyz, comment="reconstructed from a 3fwl transcript")
        payload["xyz"] = args.xyz
    else:
        payload["points"] = rec.cloud.points.tolist()
    _emit(payload, args.out)
    ok = rec.certificate.get("fingerprint_match")
    _note(f"reconstructed n={rec.cloud.n}; fingerprint match: {ok}")
    return EXIT_OK


def cmd_search(args) -> int:
    if args.config:
        try:
            config = SearchConfig.loads(Path(args.config).read_text())
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise CliFailure(EXIT_PARSE, ParseError(f"bad search config: {exc}")) from exc
    else:
        config = SearchConfig()
    overrides = {}
    if args.variant:
        overrides["variants"] = args.variant
    for key in ("seed", "budget", "trials", "eps", "out"):
        if getattr(args, key) is not None:
            overrides[key] = getattr(args, key)
    if overrides:
        config = SearchConfig.from_dict({**config.to_dict(), **overrides})
    try:
        report = run_search(config)
    except GeoWLError as exc:
        raise CliFailure(EXIT_ENGINE, exc) from exc
    summary = report.summary()
    payload = {"config": config.to_dict(), "summary": summary, "counterexamples": report.to_dict()["counterexamples"]}
    _emit(payload)
    _note(
        f"{summary['constructions']} constructions, {summary['trials_tested']} pairs tested, "
        f"counterexamples {summary['counterexamples_per_variant']}"
    )
    if summary["budget_exhausted"] and not report.records and config.trials > 0:
        return EXIT_ENGINE
    return EXIT_OK


def cmd_grouping(args) -> int:
    cloud = io.read_xyz(args.cloud)
    if cloud.n > args.max_n:
        raise CliFailure(EXIT_ENGINE, ValueError(f"n={cloud.n} exceeds the grouping cap {args.max_n}"))
    if cloud.n < 4:
        raise CliFailure(EXIT_ENGINE, ValueError("grouping needs at least four points"))
    tol = _tol(args)
    root = None
    if args.root:
        try:
            root = tuple(int(x) for x in args.root.split(","))
        except ValueError as exc:
            raise CliFailure(EXIT_PARSE, ParseError(f"bad root selector {args.root!r}")) from exc
        if len(root) != 3 or len(set(root)) != 3 or not all(0 <= x < cloud.n for x in root):
            raise CliFailure(EXIT_PARSE, ParseError("root must be three distinct node indices"))
    try:
        t = refine_to_stable(cloud, WL3, tol)
        root = _root_tuple(t, root)
        rows = build_rows(t, root)
        _, real = rows_from_ticks(distance_matrix(cloud, tol), root)
        analysis = analyse_rows(rows, real, args.budget or DEFAULT_BUDGET, tol)
    except GeoWLError as exc:
        raise CliFailure(EXIT_ENGINE, exc) from exc
    payload = dict(analysis.to_dict(), root=list(root))
    _emit(payload, args.out)
    _note(
        f"root {root}: {payload['feasible_count']} feasible groupings, "
        f"{len(payload['new_tetrahedron_findings'])} with new tetrahedra ({payload['budget_status']})"
    )
    return EXIT_OK


def cmd_tricks(args) -> int:
    path = Path(args.input)
    try:
        if path.suffix == ".json":
            t = io.read_transcript(path)
        else:
            t = refine_to_stable(io.read_xyz(path), FWL3, _tol(args))
        stats = trick_statistics(t, all_roots=args.all_roots)
    except ParseError:
        raise
    except (GeoWLError, ValueError) as exc:
        raise CliFailure(EXIT_ENGINE, exc) from exc
    _emit(stats, args.out)
    _note(f"cases {stats['case_histogram']}, collisions {stats['collision_notes']}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="geowl", description="Geometric WL refinement on 3D point clouds.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, variant_multi=False):
        sp.add_argument("--eps", type=float, default=1e-6, help="tick size on unit-diameter clouds")
        sp.add_argument("--out", help="write JSON here instead of stdout")
        if variant_multi:
            sp.add_argument("--variant", action="append", choices=VARIANT_NAMES, help="repeatable")
        return sp

    sp = common(sub.add_parser("refine", help="refine a cloud, write its transcript"))
    sp.add_argument("cloud")
    sp.add_argument("--variant", choices=VARIANT_NAMES, default="3fwl")
    sp.set_defaults(func=cmd_refine)

    sp = common(sub.add_parser("compare", help="compare two clouds per variant and with the oracle"), True)
    sp.add_argument("a")
    sp.add_argument("b")
    sp.set_defaults(func=cmd_compare)

    sp = common(sub.add_parser("reconstruct", help="rebuild a cloud from a 3fwl transcript"))
    sp.add_argument("transcript")
    sp.add_argument("--xyz", help="write the reconstructed cloud here")
    sp.set_defaults(func=cmd_reconstruct, eps=None)

    sp = sub.add_parser("search", help="run a seeded counterexample campaign")
    sp.add_argument("--config", help="SearchConfig JSON")
    sp.add_argument("--variant", action="append", choices=VARIANT_NAMES)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--budget", type=int)
    sp.add_argument("--trials", type=int)
    sp.add_argument("--eps", type=float)
    sp.add_argument("--out", help="full report path")
    sp.set_defaults(func=cmd_search)

    sp = common(sub.add_parser("grouping", help="3wl edge-equality analysis around one root"))
    sp.add_argument("cloud")
    sp.add_argument("--root", help="three node indices, e.g. 0,1,2")
    sp.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    sp.add_argument("--max-n", type=int, default=GROUPING_MAX_N)
    sp.set_defaults(func=cmd_grouping)

    sp = common(sub.add_parser("tricks", help="turn-over case and common-edge statistics"))
    sp.add_argument("input", help="XYZ cloud or 3fwl transcript JSON")
    sp.add_argument("--all-roots", action="store_true")
    sp.set_defaults(func=cmd_tricks)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        code, err = EXIT_PARSE, exc
    except CliFailure as exc:
        code, err = exc.code, exc.error
    payload = {"error": type(err).__name__, "message": str(err), "exit_code": code}
    if code == EXIT_RECONSTRUCT:
        payload["reconstruction_error"] = isinstance(err, ReconstructionError)
    _emit(payload)
    _note(f"error: {type(err).__name__}: {err}")
    return code


if __name__ == "__main__":
    sys.exit(main())
