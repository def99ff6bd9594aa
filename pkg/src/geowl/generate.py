"""Cloud families, exact transformations and the exchange constructor."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Optional

import numpy as np

from .errors import BadIndices, NotRealizable
from .geometry import (
    DEFAULT_TOL,
    EXHAUSTIVE_LIMIT,
    DistanceMatrix,
    PointCloud,
    Tolerance,
    congruent,
    congruent_matrices,
    distance_matrix,
    edm_realizable_3d,
    embed_3d,
)

FAMILIES = ("random", "lattice", "symmetric", "exchange")
TEMPLATES = ("mirror-pair", "square-pyramid", "prism", "planar")


@dataclass(frozen=True)
class FamilySpec:
    family: str
    n: int
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.n < 1:
            raise ValueError("n must be at least 1")

    def to_dict(self) -> dict:
        return {"family": self.family, "n": self.n, "seed": self.seed, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, d: dict) -> "FamilySpec":
        return cls(d["family"], int(d["n"]), int(d.get("seed", 0)), dict(d.get("params", {})))


@dataclass
class CandidatePair:
    cloud_a: PointCloud
    cloud_b: PointCloud
    provenance: dict


def random_cloud(spec: FamilySpec) -> PointCloud:
    """``n`` i.i.d. points, redrawing any point that lands too close to another.

    params: ``distribution`` ("uniform" in ``[-scale, scale]^3`` or "normal"),
    ``scale`` (default 1), ``min_separation`` as a fraction of ``scale``
    (default 1e-3).
    """
    rng = np.random.default_rng(spec.seed)
    dist = spec.params.get("distribution", "uniform")
    scale = float(spec.params.get("scale", 1.0))
    sep = float(spec.params.get("min_separation", 1e-3)) * scale
    pts = []
    while len(pts) < spec.n:
        if dist == "uniform":
            x = rng.uniform(-scale, scale, size=3)
        elif dist == "normal":
            x = rng.normal(0.0, scale, size=3)
        else:
            raise ValueError(f"unknown distribution {dist!r}")
        if all(np.linalg.norm(x - p) >= sep for p in pts):
            pts.append(x)
    return PointCloud(np.array(pts), comment=f"random n={spec.n} seed={spec.seed}")


def lattice_cloud(spec: FamilySpec) -> PointCloud:
    """``n`` distinct integer points drawn from the box ``{0..extent-1}^3``."""
    extent = int(spec.params.get("extent", 3))
    cells = np.array(list(itertools.product(range(extent), repeat=3)), dtype=float)
    if spec.n > len(cells):
        raise ValueError(f"box of extent {extent} holds only {len(cells)} points")
    rng = np.random.default_rng(spec.seed)
    idx = rng.choice(len(cells), size=spec.n, replace=False)
    return PointCloud(cells[np.sort(idx)], comment=f"lattice n={spec.n} extent={extent} seed={spec.seed}")


def lattice_family(n: int, extent: int = 3, seed: int = 0, tol: Tolerance = DEFAULT_TOL) -> Iterator[PointCloud]:
    """Endless stream of lattice clouds, skipping any congruent to one already seen."""
    seen = {}
    rng = np.random.default_rng(seed)
    while True:
        cloud = lattice_cloud(FamilySpec("lattice", n, int(rng.integers(2**31)), {"extent": extent}))
        D = distance_matrix(cloud, tol)
        key = tuple(sorted(D.ticks[np.triu_indices(n, 1)].tolist()))
        bucket = seen.setdefault(key, [])
        if any(congruent_matrices(D, other) is not None for other in bucket):
            continue
        bucket.append(D)
        yield cloud


def _template_points(template: str, n: int, rng: np.random.Generator) -> np.ndarray:
    if template == "planar":
        pts = []
        while len(pts) < n:
            x = np.array([*rng.uniform(-1, 1, size=2), 0.0])
            if all(np.linalg.norm(x - p) >= 1e-3 for p in pts):
                pts.append(x)
        return np.array(pts)
    if template == "mirror-pair":
        # three points in z = 0, the rest mirrored across that plane
        pts = [np.array([*rng.uniform(-1, 1, size=2), 0.0]) for _ in range(min(3, n))]
        while len(pts) < n:
            x, y = rng.uniform(-1, 1, size=2)
            z = rng.uniform(0.2, 1.0)
            pts.append(np.array([x, y, z]))
            if len(pts) < n:
                pts.append(np.array([x, y, -z]))
        return np.array(pts)
    if template == "square-pyramid":
        # unit square plus apexes on its axis; the first apex makes all edges 1
        h = 1 / math.sqrt(2)
        pts = [[0.5, 0.5, 0], [-0.5, 0.5, 0], [-0.5, -0.5, 0], [0.5, -0.5, 0]]
        heights = [h, -h]
        k = 1
        while len(heights) < n:
            heights += [h + 0.5 * k, -(h + 0.5 * k)]
            k += 1
        pts += [[0, 0, z] for z in heights]
        return np.array(pts[:n], dtype=float)
    if template == "prism":
        # stacked equilateral triangles with unit sides and unit layer spacing
        tri = [[0, 0], [1, 0], [0.5, math.sqrt(3) / 2]]
        pts = [[x, y, float(layer)] for layer in range(math.ceil(n / 3)) for x, y in tri]
        return np.array(pts[:n], dtype=float)
    raise ValueError(f"unknown template {template!r}; expected one of {TEMPLATES}")


def symmetric_cloud(template: str, n: int, seed: int = 0) -> PointCloud:
    """Clouds with deliberate distance coincidences.

    ``mirror-pair``: three points in a plane, the rest in mirror pairs across it.
    ``square-pyramid``: unit square, apex with unit lateral edges, then further
    apexes on the axis (n = 6 is the regular octahedron).
    ``prism``: layers of a unit equilateral triangle, unit apart.
    ``planar``: random points in the plane z = 0.
    The seed also applies an exact relabelling and axis shuffle.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    pts = _template_points(template, n, rng)
    cloud = PointCloud(pts, comment=f"{template} n={n} seed={seed}")
    if template == "planar":
        # keep z = 0 so the cloud stays literally planar
        return transform_cloud(cloud, "permutation", perm=rng.permutation(n))
    return random_exact_transform(cloud, rng)


def transform_cloud(cloud: PointCloud, op: str, **params) -> PointCloud:
    """Apply a transformation that introduces no floating-point error.

    ops: ``permutation`` (perm), ``reflection`` (axis), ``axis-rotation``
    (axes: a permutation of (0, 1, 2); signs: three of +-1), ``translation``
    (shift: integer 3-vector).
    """
    pts = cloud.points
    if op == "permutation":
        perm = np.asarray(params["perm"])
        if sorted(perm.tolist()) != list(range(cloud.n)):
            raise ValueError("perm must be a permutation of the node indices")
        out = pts[perm]
    elif op == "reflection":
        out = pts.copy()
        out[:, int(params.get("axis", 0))] *= -1
    elif op == "axis-rotation":
        axes = list(params.get("axes", (1, 0, 2)))
        signs = np.asarray(params.get("signs", (1, 1, 1)), dtype=float)
        if sorted(axes) != [0, 1, 2] or not np.all(np.abs(signs) == 1):
            raise ValueError("axes must permute (0, 1, 2) and signs must be +-1")
        out = pts[:, axes] * signs
    elif op == "translation":
        shift = np.asarray(params["shift"])
        if not np.all(shift == np.round(shift)):
            raise ValueError("only integer translations are exact")
        out = pts + shift
    else:
        raise ValueError(f"unknown transformation {op!r}")
    return PointCloud(out, comment=cloud.comment)


def random_exact_transform(cloud: PointCloud, rng: np.random.Generator, translate: bool = False) -> PointCloud:
    out = transform_cloud(cloud, "permutation", perm=rng.permutation(cloud.n))
    out = transform_cloud(
        out, "axis-rotation", axes=tuple(rng.permutation(3)), signs=tuple(rng.choice([-1, 1], size=3))
    )
    if translate:
        out = transform_cloud(out, "translation", shift=rng.integers(-3, 4, size=3))
    return out


def exchanged_matrix(D: DistanceMatrix, i: int, p: int, q: int) -> DistanceMatrix:
    t = np.array(D.ticks)
    t[i, p], t[i, q] = D.ticks[i, q], D.ticks[i, p]
    t[p, i], t[q, i] = t[i, p], t[i, q]
    return DistanceMatrix(t, D.eps)


def apply_exchange(cloud: PointCloud, i: int, p: int, q: int, tol: Tolerance = DEFAULT_TOL) -> Optional[CandidatePair]:
    """Swap ``d(i, p)`` and ``d(i, q)`` and realize the result in 3D if possible.

    Returns None when the swapped matrix has no 3D realization at tick
    resolution.  The pair still has to be tested for refinement equality and
    non-congruence by the caller.
    """
    idx = (i, p, q)
    if len(set(idx)) != 3 or not all(0 <= x < cloud.n for x in idx):
        raise BadIndices(f"need three distinct node indices below {cloud.n}, got {idx}")
    D = distance_matrix(cloud, tol)
    swapped = exchanged_matrix(D, i, p, q)
    if not edm_realizable_3d(swapped, tol):
        return None
    try:
        partner = embed_3d(swapped, tol)
    except NotRealizable:
        return None
    prov = {
        "i": i,
        "p": p,
        "q": q,
        "swapped_ticks": [int(D.ticks[i, p]), int(D.ticks[i, q])],
        "source_comment": cloud.comment,
    }
    return CandidatePair(cloud, partner, prov)


def exchange_candidates(cloud: PointCloud, tol: Tolerance = DEFAULT_TOL) -> Iterator[tuple]:
    """Every index triple whose swap changes the matrix (unordered in p, q)."""
    D = distance_matrix(cloud, tol)
    for i in range(cloud.n):
        others = [x for x in range(cloud.n) if x != i]
        for p, q in itertools.combinations(others, 2):
            if D.ticks[i, p] != D.ticks[i, q]:
                yield i, p, q


def family_cloud(spec: FamilySpec) -> PointCloud:
    if spec.family == "random":
        return random_cloud(spec)
    if spec.family == "lattice":
        return lattice_cloud(spec)
    if spec.family == "symmetric":
        return symmetric_cloud(spec.params.get("template", "square-pyramid"), spec.n, spec.seed)
    raise ValueError("the exchange family produces pairs; use the search harness")


# ---------------------------------------------------------------------------
# Relocating exchange on lattice clouds
# ---------------------------------------------------------------------------


def _signed_permutations() -> list:
    mats = []
    for perm in itertools.permutations(range(3)):
        for signs in itertools.product((1, -1), repeat=3):
            m = np.zeros((3, 3), dtype=int)
            m[range(3), perm] = signs
            mats.append(m)
    return mats


def _closure(gens) -> list:
    group = {tuple(np.eye(3, dtype=int).ravel())}
    frontier = list(group)
    while frontier:
        fresh = []
        for g in frontier:
            for h in gens:
                k = tuple((np.reshape(g, (3, 3)) @ h).ravel())
                if k not in group:
                    group.add(k)
                    fresh.append(k)
        frontier = fresh
    return sorted(group)


def _profile_key(P: np.ndarray) -> tuple:
    d = ((P[:, None, :] - P[None, :, :]) ** 2).sum(-1)
    return tuple(sorted(tuple(sorted(r)) for r in d.tolist()))


@lru_cache(maxsize=None)
def _orbit_table(reach: int) -> tuple:
    mats = _signed_permutations()
    groups = {}
    for a, b in itertools.combinations_with_replacement(range(len(mats)), 2):
        g = _closure([mats[a], mats[b]])
        groups[tuple(g)] = g
    orbits = set()
    for g in groups.values():
        ms = [np.reshape(x, (3, 3)) for x in g]
        for x in itertools.product(range(reach + 1), repeat=3):
            orbits.add(tuple(sorted({tuple(int(v) for v in m @ x) for m in ms})))
    reps = {}
    for orb in sorted(orbits, key=lambda o: (len(o), o)):
        P = np.array(orb, dtype=float)
        if not 2 <= len(P) <= EXHAUSTIVE_LIMIT:
            continue
        bucket = reps.setdefault(_profile_key(P.astype(int)), [])
        cloud = PointCloud(P, comment=f"lattice orbit n={len(P)}")
        if all(congruent(cloud, other) is None for other in bucket):
            bucket.append(cloud)
    out = [c for bucket in reps.values() for c in bucket]
    return tuple(sorted(out, key=lambda c: (c.n, c.points.tolist())))


def lattice_orbits(n_min: int, n_max: int, reach: int = 2) -> list:
    """Vertex-transitive lattice clouds: orbits of integer points under cube symmetries.

    Every subgroup of the 48 signed axis permutations generated by at most
    two elements acts on the points of ``{0..reach}^3``; orbits with
    ``n_min <= n <= n_max`` points (at most the exhaustive oracle limit) are
    kept, one per congruence class.  All
    nodes of such a cloud share one distance profile, which is exactly the
    slack the exchange trick needs.
    """
    return [c for c in _orbit_table(reach) if n_min <= c.n <= n_max]


def _integral(cloud: PointCloud) -> np.ndarray:
    P = cloud.points
    if not np.all(P == np.round(P)):
        raise ValueError("relocating exchange needs integer coordinates")
    return P.astype(int)


def relocating_exchange(cloud: PointCloud, i: int, i2: int, p: int, q: int, margin: int = 1) -> Iterator[CandidatePair]:
    """Exchange ``d(i, p)`` and ``d(i, q)`` in the associated information of the root pair ``(i, i2)``.

    Seen from the 2-tuple ``(i, i2)``, node ``p`` contributes ``{d(i, p), d(i2, p)}``
    and ``q`` contributes ``{d(i, q), d(i2, q)}``.  After the exchange the two
    nodes are moved to lattice points ``p'``, ``q'`` with::

        d(i, p') = d(i, q)    d(i2, p') = d(i2, p)
        d(i, q') = d(i, p)    d(i2, q') = d(i2, q)

    while every other node stays put; distances from ``p'``, ``q'`` to the
    remaining nodes follow from the geometry.  Candidate positions range over
    the bounding box of the cloud grown by ``margin``.
    """
    idx = (i, i2, p, q)
    if len(set(idx)) != 4 or not all(0 <= x < cloud.n for x in idx):
        raise BadIndices(f"need four distinct node indices below {cloud.n}, got {idx}")
    P = _integral(cloud)
    d2 = lambda u, v: int(((P[u] - P[v]) ** 2).sum())
    if d2(i, p) == d2(i, q):
        return
    lo, hi = P.min() - margin, P.max() + margin
    box = np.array(list(itertools.product(range(lo, hi + 1), repeat=3)))
    to_i = ((box - P[i]) ** 2).sum(1)
    to_i2 = ((box - P[i2]) ** 2).sum(1)
    cand_p = np.flatnonzero((to_i == d2(i, q)) & (to_i2 == d2(i2, p)))
    cand_q = np.flatnonzero((to_i == d2(i, p)) & (to_i2 == d2(i2, q)))
    rest = {tuple(x) for k, x in enumerate(P.tolist()) if k not in (p, q)}
    for a in cand_p:
        A = tuple(box[a].tolist())
        if A in rest:
            continue
        for b in cand_q:
            B = tuple(box[b].tolist())
            if a == b or B in rest:
                continue
            Q = P.copy()
            Q[p], Q[q] = box[a], box[b]
            prov = {
                "constructor": "relocating-exchange",
                "root": [i, i2],
                "moved": [p, q],
                "from": [P[p].tolist(), P[q].tolist()],
                "to": [list(A), list(B)],
                "source_comment": cloud.comment,
            }
            yield CandidatePair(cloud, PointCloud(Q.astype(float), comment=f"exchanged {cloud.comment}"), prov)


def swap_constructions(cloud: PointCloud, tol: Tolerance = DEFAULT_TOL) -> Iterator[Optional[CandidatePair]]:
    """Literal swaps over every admissible triple; None marks an unrealizable one."""
    for i, p, q in exchange_candidates(cloud, tol):
        pair = apply_exchange(cloud, i, p, q, tol)
        if pair is not None:
            pair.provenance["constructor"] = "distance-swap"
        yield pair


def relocating_constructions(cloud: PointCloud, margin: int = 1) -> Iterator[CandidatePair]:
    n = cloud.n
    for i, i2 in itertools.permutations(range(n), 2):
        others = [x for x in range(n) if x not in (i, i2)]
        for p, q in itertools.combinations(others, 2):
            yield from relocating_exchange(cloud, i, i2, p, q, margin)


def exchange_seeds(n_min: int, n_max: int, seed: int = 0, extent: int = 3) -> Iterator[PointCloud]:
    """Seed clouds for an exchange campaign: lattice orbits first, then random lattice clouds.

    The orbit list is shuffled by ``seed``; the lattice stream cycles through
    ``n_min..n_max`` and never ends.
    """
    rng = np.random.default_rng(seed)
    orbits = lattice_orbits(n_min, n_max)
    for k in rng.permutation(len(orbits)):
        yield orbits[k]
    streams = {n: lattice_family(n, extent, seed + n) for n in range(max(n_min, 4), n_max + 1)}
    while streams:
        for n in list(streams):
            yield next(streams[n])
