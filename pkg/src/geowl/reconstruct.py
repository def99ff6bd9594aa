"""Rebuild a point cloud from a 3-FWL transcript alone.

The pipeline reads only colour tables, never coordinates:

1. pick a non-degenerate root colour and label its three edges from the
   degenerate ``(0, d, d)`` entries of each slot (common edges);
2. strip the common edge from each neighbour triangle, leaving a pair of new
   edges per slot, and close the three triangles into a tetrahedron over the
   root face (apex distances);
3. trilaterate every external node to a mirror pair of candidates, fix one
   anchor above the root plane, and repeat the analysis on the three faces
   that contain the anchor;
4. keep the candidates present in all four candidate sets;
5. read the exact tick distances back out of the transcript and polish the
   positions onto them, then certify by refining the result again.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    AmbiguousNode,
    CEAbsentFromSignature,
    CertificateMismatch,
    CountMismatch,
    ImpossibleHistogram,
    InconsistentPairs,
    MalformedTranscript,
    NoNonDegenerateTuple,
    NotRealizable,
    UnrealizableExternal,
)
from .geometry import (
    DEFAULT_TOL,
    DistanceMatrix,
    PointCloud,
    Tolerance,
    congruent_matrices,
    fit_to_ticks,
    trilaterate,
)
from .refinement import FWL3, RefinementTranscript, TreeNode, WLTree, expand, refine_to_stable

MAX_RECONSTRUCT_N = 50


@dataclass(frozen=True)
class CommonEdgeReport:
    slot: int  # 1, 2 or 3
    ce_length: int  # ticks


@dataclass(frozen=True)
class NeighborFaces:
    """New-edge pairs of one external node, one sorted pair per slot."""

    pairs: tuple
    collisions: tuple = ()  # slots whose signature repeated the common edge

    @property
    def ne_set(self) -> tuple:
        return tuple(sorted(itertools.chain.from_iterable(self.pairs)))


@dataclass(frozen=True)
class ApexDistances:
    r_a: int
    r_b: int
    r_c: int

    def as_tuple(self) -> tuple:
        return (self.r_a, self.r_b, self.r_c)


@dataclass
class CandidatePointSet:
    face: np.ndarray  # (3, 3) slot-ordered vertex positions
    anchor: np.ndarray
    pairs: list  # per external: [x] (merged, in-plane) or [x, x'] (mirror pair)
    sources: list = field(default_factory=list)  # per pair: index into the externals list
    separations: list = field(default_factory=list)  # per pair: distance between mirror images

    @property
    def candidates(self) -> list:
        return [p for pair in self.pairs for p in pair]

    @property
    def merged(self) -> int:
        return sum(1 for pair in self.pairs if len(pair) == 1)

    def __len__(self):
        return len(self.candidates)


@dataclass
class Reconstruction:
    cloud: PointCloud
    ticks: DistanceMatrix
    certificate: dict


# ---------------------------------------------------------------------------
# Root selection and the per-face analysis
# ---------------------------------------------------------------------------


def _is_class2(sig) -> bool:
    return sig[0] == 0 and sig[1] == sig[2] and sig[1] > 0


def _heron_area(a, b, c) -> float:
    s = (a + b + c) * (-a + b + c) * (a - b + c) * (a + b - c)
    return math.sqrt(max(s, 0.0)) / 4.0


@dataclass(frozen=True)
class RootChoice:
    color: int
    signature: tuple  # sorted base edge lengths (ticks)


def select_root(t: RefinementTranscript) -> RootChoice:
    """Pick the final colour class used as the reconstruction base.

    Candidates are colours whose initial signature has three positive
    distances.  Scalene classes are preferred; among those the largest base
    area wins (better conditioned trilateration), ties broken by the
    lexicographically smallest signature and then the smallest colour id.
    """
    if t.variant != FWL3:
        raise ValueError(f"reconstruction needs a 3fwl transcript, got {t.variant}")
    top = t.rounds
    best = None
    for color in range(t.num_colors(top)):
        sig = t.init_signature(top, color)
        if sig[0] <= 0:
            continue
        scalene = sig[0] < sig[1] < sig[2]
        key = (not scalene, -_heron_area(*(float(x) for x in sig)), sig, color)
        if best is None or key < best:
            best = key
    if best is None:
        raise NoNonDegenerateTuple("no tuple of three distinct points in the transcript")
    return RootChoice(best[3], best[2])


def _node(tree) -> TreeNode:
    return tree.node if isinstance(tree, WLTree) else tree


def identify_common_edges(tree) -> tuple:
    """Common edge of each slot, from the two degenerate ``(0, d, d)`` children.

    Replacing slot 1 of ``(a, b, c)`` by ``b`` or ``c`` gives a tuple with a
    repeated node whose signature is ``(0, d(b, c), d(b, c))``; exactly two
    such entries exist per slot.
    """
    node = _node(tree)
    if not node.children:
        raise MalformedTranscript("tree has no level-1 entries")
    if node.signature[0] == 0:
        raise MalformedTranscript("root tuple is degenerate")
    reports = []
    for slot in range(3):
        found = [entry[slot].signature for entry in node.children if _is_class2(entry[slot].signature)]
        if len(found) != 2 or found[0] != found[1]:
            raise MalformedTranscript(
                f"slot {slot + 1}: expected two matching (0, d, d) entries, found {found}"
            )
        reports.append(CommonEdgeReport(slot + 1, int(found[0][1])))
    ces = sorted(r.ce_length for r in reports)
    if tuple(ces) != tuple(sorted(node.signature)):
        raise MalformedTranscript("common edges do not reproduce the root signature")
    return tuple(reports)


def _external_entries(node: TreeNode) -> list:
    # Entries for j in the root tuple contain a repeated node (a zero distance).
    return [entry for entry in node.children if all(x.signature[0] > 0 for x in entry)]


def _remove_one(sig, value):
    sig = list(sig)
    if value not in sig:
        raise CEAbsentFromSignature(f"common edge {value} missing from signature {tuple(sig)}")
    repeated = sig.count(value) > 1
    sig.remove(value)
    return tuple(sorted(sig)), repeated


def _faces_for(entry, common_edges) -> NeighborFaces:
    pairs, collisions = [], []
    for slot, ce in enumerate(common_edges):
        pair, repeated = _remove_one(entry[slot].signature, ce.ce_length)
        pairs.append(pair)
        if repeated:
            collisions.append(slot + 1)
    return NeighborFaces(tuple(pairs), tuple(collisions))


def extract_new_edges(tree, common_edges) -> list:
    """New-edge pairs for every external entry of the root, in entry order.

    When a slot signature contains the common-edge length twice, removing
    either copy leaves the same pair of values; the slot is recorded in
    ``NeighborFaces.collisions``.
    """
    return [_faces_for(entry, common_edges) for entry in _external_entries(_node(tree))]


def classify_ne_case(ne_set: Sequence[int]) -> int:
    """1: three lengths 2:2:2, 2: two lengths 4:2, 3: one length x6."""
    if len(ne_set) != 6:
        raise ImpossibleHistogram(f"new-edge multiset must have 6 values, got {len(ne_set)}")
    shape = tuple(sorted(Counter(ne_set).values()))
    cases = {(2, 2, 2): 1, (2, 4): 2, (6,): 3}
    if shape not in cases:
        raise ImpossibleHistogram(f"new-edge histogram {shape} is not 2:2:2, 4:2 or 6")
    return cases[shape]


def apex_assignments(faces: NeighborFaces) -> list:
    """Every (r_a, r_b, r_c) consistent with the three slot pairs.

    Slot 1 holds {r_b, r_c}, slot 2 {r_a, r_c}, slot 3 {r_a, r_b}.
    """
    p1, p2, p3 = (tuple(p) for p in faces.pairs)
    out = set()
    for i2, i3 in itertools.product(range(2), range(2)):
        if p2[i2] != p3[i3]:
            continue
        r_a, r_c, r_b = p2[i2], p2[1 - i2], p3[1 - i3]
        if tuple(sorted((r_b, r_c))) == tuple(sorted(p1)):
            out.add((r_a, r_b, r_c))
    return [ApexDistances(*x) for x in sorted(out)]


def resolve_apex_distances(faces: NeighborFaces) -> ApexDistances:
    """Close the three neighbour triangles over the root face.

    The assignment is forced: ``r_a`` is the value shared by slots 2 and 3,
    and so on.  In the 4:2 and 6 cases more than one way of flipping a
    triangle may fit, but every fit gives the same apex distances.
    """
    classify_ne_case(faces.ne_set)
    options = apex_assignments(faces)
    if not options:
        raise InconsistentPairs(f"no apex assignment fits slot pairs {faces.pairs}")
    return options[0]


def _local_ticks(base: tuple, apex: ApexDistances) -> DistanceMatrix:
    d_ab, d_bc, d_ca = base
    r = apex.as_tuple()
    t = np.array(
        [
            [0, d_ab, d_ca, r[0]],
            [d_ab, 0, d_bc, r[1]],
            [d_ca, d_bc, 0, r[2]],
            [r[0], r[1], r[2], 0],
        ]
    )
    return DistanceMatrix(t)


# ---------------------------------------------------------------------------
# Candidate point sets
# ---------------------------------------------------------------------------


def default_position_tol(eps: float) -> float:
    """Matching radius for reconstructed positions.

    Distances are known only to half a tick; heights near a face plane come
    out of a square root, so their error scales like ``sqrt(eps)``.
    """
    return max(2 * math.sqrt(eps), 100 * eps)


def _trilaterate_pair(face, apex: ApexDistances, tick: float, pos_tol: float):
    r = [x * tick for x in apex.as_tuple()]
    sols = trilaterate(face[0], face[1], face[2], *r, tol=Tolerance(100 * tick))
    if not sols:
        raise UnrealizableExternal(f"apex distances {apex.as_tuple()} do not meet over the face")
    if len(sols) == 2:
        sep = float(np.linalg.norm(sols[0] - sols[1]))
        if sep <= 2 * pos_tol:
            return [(sols[0] + sols[1]) / 2], sep
        return sols, sep
    return sols, 0.0


def candidate_points(
    face_positions,
    externals: Sequence[ApexDistances],
    anchor_index: Optional[int],
    tol: Tolerance = DEFAULT_TOL,
    pos_tol: Optional[float] = None,
) -> CandidatePointSet:
    """Mirror-paired candidate positions of the externals over one face.

    Apex distances are in ticks of ``tol.eps``.  The anchor's pair is dropped
    (its position is the positive-side solution); in-plane externals, whose
    mirror images lie within ``2 * pos_tol``, contribute one candidate at the
    foot of the mirror pair.
    """
    face = np.asarray(face_positions, dtype=float)
    pos_tol = default_position_tol(tol.eps) if pos_tol is None else pos_tol
    anchor = None
    pairs, sources, seps = [], [], []
    for idx, apex in enumerate(externals):
        sols, sep = _trilaterate_pair(face, apex, tol.eps, pos_tol)
        if idx == anchor_index:
            anchor = sols[0]
            continue
        pairs.append(sols)
        sources.append(idx)
        seps.append(sep)
    return CandidatePointSet(face, anchor, pairs, sources, seps)


def _radius(cp, i, tol):
    # A merged candidate stands for both sides of the plane.
    return 2 * tol if len(cp.pairs[i]) == 1 else tol


def _near(x, rx, pool) -> bool:
    return any(np.linalg.norm(x - p) <= max(rx, rp) for p, rp in pool)


def intersect_cps(cp1, cp2, cp3, cp4, tol: float) -> list:
    """Positions of the externals of ``cp1`` that every candidate set supports.

    A candidate with no partner within ``tol`` in some other set is deleted;
    deletions repeat until nothing changes, so removing one mirror image
    confirms the other.  Returns one position per ``cp1`` pair, in pair
    order, taken from the candidate set where that node is best conditioned.
    """
    cps = [cp1, cp2, cp3, cp4]
    alive = [[list(range(len(pair))) for pair in cp.pairs] for cp in cps]

    def pool(s):
        cp = cps[s]
        return [(cp.pairs[i][m], _radius(cp, i, tol)) for i, members in enumerate(alive[s]) for m in members]

    changed = True
    while changed:
        changed = False
        pools = [pool(s) for s in range(4)]
        for s in range(4):
            for i, members in enumerate(alive[s]):
                keep = [
                    m
                    for m in members
                    if all(
                        _near(cps[s].pairs[i][m], _radius(cps[s], i, tol), pools[o]) for o in range(4) if o != s
                    )
                ]
                if len(keep) != len(members):
                    alive[s][i] = keep
                    changed = True
    if any(not members for members in alive[0]):
        raise CountMismatch("a node lost every candidate position")

    # Distinct surviving positions must be matched one-to-one with the pairs.
    distinct = []
    owners = []
    for i, members in enumerate(alive[0]):
        ids = set()
        for m in members:
            x = cp1.pairs[i][m]
            hit = next((q for q, y in enumerate(distinct) if np.linalg.norm(x - y) <= _radius(cp1, i, tol)), None)
            if hit is None:
                distinct.append(x)
                hit = len(distinct) - 1
            ids.add(hit)
        owners.append(ids)
    if len(distinct) > len(cp1.pairs):
        raise AmbiguousNode(
            f"{len(distinct)} surviving positions for {len(cp1.pairs)} nodes; a mirror pair is unresolved"
        )
    if len(distinct) < len(cp1.pairs):
        raise CountMismatch(f"{len(distinct)} resolved positions for {len(cp1.pairs)} nodes")
    assignment = _match(owners)
    if assignment is None:
        raise AmbiguousNode("surviving positions cannot be assigned one per node")

    resolved = []
    for i, q in enumerate(assignment):
        x = distinct[q]
        best_sep, best = cp1.separations[i], x
        for cp in cps[1:]:
            for j, pair in enumerate(cp.pairs):
                for y in pair:
                    near = np.linalg.norm(x - y) <= max(_radius(cp1, i, tol), _radius(cp, j, tol))
                    if near and cp.separations[j] > best_sep:
                        best_sep, best = cp.separations[j], y
        resolved.append(np.asarray(best, dtype=float))
    return resolved


def _match(owners):
    n = len(owners)
    taken = {}

    def augment(i, seen):
        for q in sorted(owners[i]):
            if q in seen:
                continue
            seen.add(q)
            if q not in taken or augment(taken[q], seen):
                taken[q] = i
                return True
        return False

    for i in range(n):
        if not augment(i, set()):
            return None
    out = [None] * n
    for q, i in taken.items():
        out[i] = q
    return out


# ---------------------------------------------------------------------------
# Full reconstruction
# ---------------------------------------------------------------------------


@dataclass
class _Face:
    """Analysis of one non-degenerate tuple colour at a given round."""

    node: TreeNode
    common_edges: tuple
    entries: list  # external entries (triples of TreeNode)
    faces: list  # NeighborFaces per entry
    apexes: list  # ApexDistances per entry
    cases: list


def _analyse(t: RefinementTranscript, r: int, color: int, notes: list, turnover: list) -> _Face:
    node = expand(t, r, color, 1)
    ces = identify_common_edges(node)
    entries = _external_entries(node)
    if len(entries) != t.n - 3:
        raise MalformedTranscript(f"expected {t.n - 3} external entries, found {len(entries)}")
    faces = [_faces_for(e, ces) for e in entries]
    base = (ces[2].ce_length, ces[0].ce_length, ces[1].ce_length)  # d_ab, d_bc, d_ca
    apexes, cases = [], []
    for f in faces:
        case = classify_ne_case(f.ne_set)
        apex = resolve_apex_distances(f)
        if f.collisions:
            notes.append({"round": r, "color": int(color), "slots": list(f.collisions)})
        if case in (2, 3):
            options = apex_assignments(f)
            ref = _local_ticks(base, options[0])
            ok = all(congruent_matrices(ref, _local_ticks(base, o)) is not None for o in options[1:])
            turnover.append({"case": case, "assignments": len(options), "congruent": ok})
            if not ok:
                raise MalformedTranscript(f"turn-over alternatives disagree for pairs {f.pairs}")
        apexes.append(apex)
        cases.append(case)
    return _Face(node, ces, entries, faces, apexes, cases)


def _base_frame(d_ab, d_bc, d_ca):
    x = (d_ab * d_ab + d_ca * d_ca - d_bc * d_bc) / (2 * d_ab)
    y = math.sqrt(max(d_ca * d_ca - x * x, 0.0))
    return np.array([0.0, 0.0, 0.0]), np.array([d_ab, 0.0, 0.0]), np.array([x, y, 0.0])


def _find_entry(apexes, target, exclude=()):
    for i, a in enumerate(apexes):
        if i not in exclude and a.as_tuple() == tuple(target):
            return i
    return None


def _small_reconstruction(t: RefinementTranscript):
    n, eps = t.n, t.eps
    if n == 1:
        return np.zeros((1, 3)), np.zeros((1, 1), dtype=np.int64)
    if n == 2:
        d = max(sig[1] for sig in t.init_table)
        return np.array([[0.0, 0, 0], [d * eps, 0, 0]]), np.array([[0, d], [d, 0]])
    root = select_root(t)
    node = expand(t, t.rounds, root.color, 1)
    ces = identify_common_edges(node)
    d_bc, d_ca, d_ab = (c.ce_length for c in ces)
    pts = np.array(_base_frame(d_ab * eps, d_bc * eps, d_ca * eps))
    ticks = np.array([[0, d_ab, d_ca], [d_ab, 0, d_bc], [d_ca, d_bc, 0]])
    return pts, ticks


def reconstruct(
    t: RefinementTranscript,
    tol: Optional[Tolerance] = None,
    anchor: int = 0,
    pos_tol: Optional[float] = None,
) -> Reconstruction:
    """Generate the unique cloud described by a 3-FWL transcript.

    ``anchor`` ranks the admissible anchors (externals off the root plane,
    highest first); 0 picks the best conditioned one.  The certificate
    records whether the output refines back to the transcript's fingerprint
    together with the intermediate statistics.
    """
    if t.variant != FWL3:
        raise ValueError(f"reconstruction needs a 3fwl transcript, got {t.variant}")
    if t.n > MAX_RECONSTRUCT_N:
        raise ValueError(f"n={t.n} exceeds the reconstruction cap of {MAX_RECONSTRUCT_N}")
    if t.rounds < 2:
        raise MalformedTranscript("reconstruction needs at least two recorded rounds")
    tol = tol or Tolerance(t.eps)
    eps = tol.eps
    pos_tol = default_position_tol(eps) if pos_tol is None else pos_tol
    cert = {
        "n": t.n,
        "anchor": None,
        "planar": False,
        "cp_sizes": [],
        "cp_merged": [],
        "case_histogram": {"1": 0, "2": 0, "3": 0},
        "collision_notes": [],
        "turnover_checks": [],
    }
    if t.n <= 3:
        pts, ticks = _small_reconstruction(t)
        D = DistanceMatrix(ticks, eps)
        return _certify(t, pts, D, cert)

    T = t.rounds
    notes, turnover = cert["collision_notes"], cert["turnover_checks"]
    root = select_root(t)
    cert["root_signature"] = list(root.signature)
    rootf = _analyse(t, T, root.color, notes, turnover)
    for c in rootf.cases:
        cert["case_histogram"][str(c)] += 1
    d_bc, d_ca, d_ab = (c.ce_length for c in rootf.common_edges)
    a, b, c = _base_frame(d_ab * eps, d_bc * eps, d_ca * eps)
    base = np.array([a, b, c])

    sols = [_trilaterate_pair(base, apex, eps, pos_tol) for apex in rootf.apexes]
    heights = [sep / 2 for _, sep in sols]
    admissible = sorted(
        (i for i, (s, _) in enumerate(sols) if len(s) == 2), key=lambda i: (-heights[i], i)
    )
    ext_apex = rootf.apexes

    if not admissible:
        # Every external lies in the root plane: nothing to mirror.
        cert["planar"] = True
        positions = [s[0] for s, _ in sols]
        owners = list(range(len(ext_apex)))
        m_idx = None
    else:
        if not 0 <= anchor < len(admissible):
            raise ValueError(f"anchor rank {anchor} out of range (have {len(admissible)} admissible anchors)")
        m_idx = admissible[anchor]
        cert["anchor"] = int(m_idx)
        m = sols[m_idx][0][0]
        cp1 = candidate_points(base, ext_apex, m_idx, tol, pos_tol)
        r_ma, r_mb, r_mc = ext_apex[m_idx].as_tuple()
        entry = rootf.entries[m_idx]
        # Faces containing the anchor, in slot order, with the vertex left out.
        specs = [
            (entry[2], np.array([a, b, m]), (d_ca, d_bc, r_mc)),  # (a, b, m), anchor c
            (entry[1], np.array([a, m, c]), (d_ab, r_mb, d_bc)),  # (a, m, c), anchor b
            (entry[0], np.array([m, b, c]), (r_ma, d_ab, d_ca)),  # (m, b, c), anchor a
        ]
        cps = [cp1]
        for child, face_pts, left_out in specs:
            ff = _analyse(t, T - 1, child.color, notes, turnover)
            k = _find_entry(ff.apexes, left_out)
            if k is None:
                raise MalformedTranscript(f"face {child.color} lists no entry for its left-out vertex")
            cps.append(candidate_points(face_pts, ff.apexes, k, tol, pos_tol))
        cert["cp_sizes"] = [len(cp) for cp in cps]
        cert["cp_merged"] = [cp.merged for cp in cps]
        resolved = intersect_cps(*cps, tol=pos_tol)
        positions = [None] * len(ext_apex)
        positions[m_idx] = m
        for src, x in zip(cp1.sources, resolved):
            positions[src] = x
        owners = list(range(len(ext_apex)))

    pts = np.vstack([base] + [positions[i] for i in owners])
    ticks = _labelled_ticks(t, rootf, (d_ab, d_bc, d_ca), pts, eps, notes, turnover)
    return _certify(t, pts, DistanceMatrix(ticks, eps), cert)


def _labelled_ticks(t, rootf: _Face, base, pts, eps, notes, turnover) -> np.ndarray:
    """Exact tick matrix of the reconstructed nodes, read from the transcript.

    Root-to-external distances are the apex distances.  For two externals
    ``x`` and ``y`` the face ``(a, b, x)`` lists ``y`` with its distances to
    ``a``, ``b`` and ``x``; ``y``'s entry is the one whose first two distances
    match exactly, choosing the nearest third distance to the geometry.
    """
    n = t.n
    d_ab, d_bc, d_ca = base
    ticks = np.zeros((n, n), dtype=np.int64)
    ticks[0, 1] = d_ab
    ticks[1, 2] = d_bc
    ticks[0, 2] = d_ca
    apex = [x.as_tuple() for x in rootf.apexes]
    for i, r in enumerate(apex):
        ticks[:3, 3 + i] = r
    listings = []
    for i in range(len(apex)):
        face = _analyse(t, t.rounds - 1, rootf.entries[i][2].color, notes, turnover)
        listings.append([x.as_tuple() for x in face.apexes])
    _untangle_twins(apex, listings, pts, eps)
    for i, listed in enumerate(listings):
        for j in range(len(apex)):
            if j == i:
                continue
            predicted = np.linalg.norm(pts[3 + i] - pts[3 + j]) / eps
            options = [r[2] for r in listed if r[0] == apex[j][0] and r[1] == apex[j][1]]
            if not options:
                raise MalformedTranscript(f"face (a, b, x{i}) has no entry matching node {j}")
            value = min(options, key=lambda v: (abs(v - predicted), v))
            if i < j:
                ticks[3 + i, 3 + j] = value
            elif ticks[3 + j, 3 + i] != value:
                raise MalformedTranscript(f"faces disagree on the distance between nodes {j} and {i}")
    return ticks + ticks.T


def _untangle_twins(apex, listings, pts, eps) -> None:
    """Permute positions among externals with identical apex triples.

    Such twins (typically mirror images through the root plane) are placed
    in an arbitrary order, but their faces tell them apart.  Each group is
    reordered in place to best agree with the face listings.
    """
    groups = {}
    for i, r in enumerate(apex):
        groups.setdefault(r, []).append(i)
    groups = [g for g in groups.values() if 1 < len(g) <= 6]
    if not groups:
        return

    def mismatch() -> float:
        total = 0.0
        for i, listed in enumerate(listings):
            for j in range(len(apex)):
                if j == i:
                    continue
                predicted = np.linalg.norm(pts[3 + i] - pts[3 + j]) / eps
                options = [r[2] for r in listed if r[0] == apex[j][0] and r[1] == apex[j][1]]
                total += min((abs(v - predicted) for v in options), default=np.inf)
        return total

    for _ in range(len(groups) + 1):
        changed = False
        for g in groups:
            rows = [3 + i for i in g]
            original = pts[rows].copy()
            best, best_perm = mismatch(), None
            for perm in itertools.permutations(range(len(g))):
                if perm == tuple(range(len(g))):
                    continue
                pts[rows] = original[list(perm)]
                score = mismatch()
                if score < best - 0.5:
                    best, best_perm = score, perm
            pts[rows] = original if best_perm is None else original[list(best_perm)]
            changed |= best_perm is not None
        if not changed:
            break


def _certify(t: RefinementTranscript, pts: np.ndarray, D: DistanceMatrix, cert: dict) -> Reconstruction:
    deviation = 0.0
    if D.n > 1:
        iu = np.triu_indices(D.n, 1)
        dist = np.linalg.norm(pts[iu[0]] - pts[iu[1]], axis=1) / D.eps
        deviation = float(np.abs(dist - D.ticks[iu]).max())
    cert["max_position_deviation_ticks"] = deviation
    try:
        polished = fit_to_ticks(pts, D)
    except NotRealizable as exc:
        raise CertificateMismatch(f"reconstructed distances cannot be realized exactly: {exc}") from exc
    cloud = PointCloud(polished, comment="reconstructed from a 3fwl transcript")
    again = refine_to_stable(cloud, FWL3, Tolerance(D.eps))
    match = again.fingerprint == t.fingerprint
    cert["fingerprint_match"] = bool(match)
    cert["fingerprint"] = t.fingerprint.digest
    if not match:
        raise CertificateMismatch("reconstructed cloud refines to a different fingerprint")
    return Reconstruction(cloud, D, cert)


def trick_statistics(t: RefinementTranscript, all_roots: bool = False) -> dict:
    """Turn-over case counts and common-edge collisions seen from the transcript.

    By default only the selected root colour is analysed; ``all_roots``
    walks every non-degenerate final colour instead.
    """
    if t.variant != FWL3:
        raise ValueError(f"trick statistics need a 3fwl transcript, got {t.variant}")
    if t.n < 4:
        raise NoNonDegenerateTuple("need at least four points for external entries")
    T = t.rounds
    if all_roots:
        colors = [c for c in range(t.num_colors(T)) if t.init_signature(T, c)[0] > 0]
    else:
        colors = [select_root(t).color]
    hist = {"1": 0, "2": 0, "3": 0}
    notes, turnover, ces = [], [], []
    for color in colors:
        face = _analyse(t, T, color, notes, turnover)
        ces.append([c.ce_length for c in face.common_edges])
        for c in face.cases:
            hist[str(c)] += 1
    return {
        "roots_analysed": len(colors),
        "case_histogram": hist,
        "common_edges": ces,
        "collision_notes": len(notes),
        "turnover_checks": len(turnover),
        "turnover_all_congruent": all(x["congruent"] for x in turnover),
    }
