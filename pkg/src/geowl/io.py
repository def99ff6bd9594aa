"""XYZ clouds and JSON transcripts."""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Union

import numpy as np

from .errors import InvalidCloud, ParseError
from .geometry import PointCloud
from .refinement import Fingerprint, RefinementTranscript, Variant

PathLike = Union[str, Path]


def parse_xyz(text: str) -> PointCloud:
    """Line 1: count, line 2: comment, then one ``x y z`` line per point."""
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty XYZ input")
    try:
        n = int(lines[0].strip())
    except ValueError:
        raise ParseError(f"first line must be the point count, got {lines[0]!r}") from None
    if n < 1:
        raise ParseError(f"point count must be positive, got {n}")
    comment = lines[1] if len(lines) > 1 else ""
    body = [ln for ln in lines[2:] if ln.strip()]
    if len(body) != n:
        raise ParseError(f"header says {n} points but {len(body)} coordinate lines follow")
    pts = []
    for k, ln in enumerate(body, start=3):
        parts = ln.split()
        if len(parts) != 3:
            raise ParseError(f"line {k}: expected three coordinates, got {len(parts)} fields")
        try:
            xyz = [float(p) for p in parts]
        except ValueError:
            raise ParseError(f"line {k}: non-numeric coordinate in {ln!r}") from None
        if not all(math.isfinite(v) for v in xyz):
            raise ParseError(f"line {k}: coordinates must be finite")
        pts.append(xyz)
    try:
        return PointCloud(np.array(pts), comment=comment)
    except InvalidCloud as exc:
        raise ParseError(str(exc)) from exc


def read_xyz(path: PathLike) -> PointCloud:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    return parse_xyz(text)


def format_xyz(cloud: PointCloud, comment: str = None) -> str:
    comment = cloud.comment if comment is None else comment
    rows = [f"{x!r} {y!r} {z!r}" for x, y, z in cloud.points.tolist()]
    return "\n".join([str(cloud.n), comment.replace("\n", " "), *rows]) + "\n"


def write_xyz(cloud: PointCloud, path: PathLike, comment: str = None) -> None:
    Path(path).write_text(format_xyz(cloud, comment))


def transcript_to_dict(t: RefinementTranscript) -> dict:
    return {
        "format": "geowl-transcript/1",
        "variant": t.variant.name,
        "n": t.n,
        "eps": t.eps,
        "rounds": t.rounds,
        "init_table": [list(map(int, sig)) for sig in t.init_table],
        "rule_rows": [rows.tolist() for rows in t.rule_rows],
        "colorings": [c.ravel().tolist() for c in t.colorings],
        "fingerprint": t.fingerprint.digest,
    }


def transcript_from_dict(d: dict) -> RefinementTranscript:
    """Rebuild a transcript and check it against its recorded digest."""
    try:
        variant = Variant.parse(d["variant"])
        n = int(d["n"])
        shape = (n,) * variant.k
        t = RefinementTranscript(
            variant,
            n,
            float(d["eps"]),
            [tuple(int(x) for x in sig) for sig in d["init_table"]],
            [np.array(rows, dtype=np.int64).reshape(len(rows), -1) for rows in d["rule_rows"]],
            [np.array(c, dtype=np.int64).reshape(shape) for c in d["colorings"]],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed transcript: {exc}") from exc
    if len(t.colorings) != t.rounds + 1 or ("rounds" in d and int(d["rounds"]) != t.rounds):
        raise ParseError("transcript round count is inconsistent")
    if "fingerprint" in d and d["fingerprint"] != t.fingerprint.digest:
        raise ParseError("transcript tables do not match the recorded fingerprint")
    return t


def write_transcript(t: RefinementTranscript, path: PathLike) -> None:
    Path(path).write_text(json.dumps(transcript_to_dict(t)))


def read_transcript(path: PathLike) -> RefinementTranscript:
    try:
        d = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read transcript {path}: {exc}") from exc
    return transcript_from_dict(d)


def fingerprint_to_dict(fp: Fingerprint) -> dict:
    return {
        "variant": fp.variant,
        "n": fp.n,
        "digest": fp.digest,
        "final": [[list(sig), count] for sig, count in fp.entries],
    }
