"""Edge-equality analysis of 3-WL neighbour multisets.

3-WL keeps one multiset per slot, so the joint triple that ties a neighbour
node to the root is lost.  Given the three rows of new-edge pairs, this module
enumerates every way of regrouping them into tetrahedra whose spliced edges
agree, labels the resulting edge-equality classes, and checks whether a
regrouping produces a tetrahedron the real cloud does not contain.

Cells: every new-edge value is addressed as ``(row, index, side)``.  Within a
group ``(p1, p2, p3)`` the sides splice as::

    p1 = (r_b, r_c)   slot 1, the triangle (j, b, c) minus edge bc
    p2 = (r_a, r_c)   slot 2
    p3 = (r_a, r_b)   slot 3

so ``p1.c ~ p2.c``, ``p1.b ~ p3.b`` and ``p2.a ~ p3.a``.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np
from scipy.cluster.hierarchy import DisjointSet

from .errors import BudgetExceeded, MalformedTranscript, NoNonDegenerateTuple
from .geometry import DEFAULT_TOL, DistanceMatrix, Tolerance, tetrahedron_volume_sq
from .refinement import WL3, RefinementTranscript
from .reconstruct import _is_class2, _remove_one

DEFAULT_BUDGET = 10**6


@dataclass(frozen=True)
class NERows:
    rows: tuple  # three tuples of sorted (NE, NE) pairs, one row per slot
    common_edges: tuple  # CE length per slot: (d_bc, d_ca, d_ab)
    root_signature: tuple

    @property
    def size(self) -> int:
        return len(self.rows[0])

    @property
    def base(self) -> tuple:
        """Base edge lengths as (d_ab, d_bc, d_ca)."""
        d_bc, d_ca, d_ab = self.common_edges
        return (d_ab, d_bc, d_ca)


@dataclass(frozen=True)
class Grouping:
    groups: tuple  # per group: (index in row 1, index in row 2, index in row 3)
    orientation: tuple  # per group: three bits, see oriented()

    def oriented(self, rows: NERows, g: int):
        """``((b, c), (a, c), (a, b))`` sides of group ``g``."""
        out = []
        for slot, (idx, bit) in enumerate(zip(self.groups[g], self.orientation[g])):
            pair = rows.rows[slot][idx]
            out.append((pair[bit], pair[1 - bit]))
        return tuple(out)

    def apex_triples(self, rows: NERows) -> list:
        """(r_a, r_b, r_c) of each group."""
        out = []
        for g in range(len(self.groups)):
            (b1, c1), (a2, c2), (a3, b3) = self.oriented(rows, g)
            out.append((a2, b1, c1))
        return out

    def canonical(self, rows: NERows) -> tuple:
        return tuple(sorted(self.apex_triples(rows)))


@dataclass
class EqualityClasses:
    labels: dict  # cell -> class number
    lengths: dict  # class number -> sorted distinct tick lengths in the class
    feasible: bool

    @property
    def count(self) -> int:
        return len(self.lengths)

    def partition(self) -> set:
        classes = {}
        for cell, lab in self.labels.items():
            classes.setdefault(lab, set()).add(cell)
        return {frozenset(c) for c in classes.values()}


def _root_tuple(t: RefinementTranscript, root) -> tuple:
    if root is not None:
        return tuple(int(x) for x in root)
    n = t.n
    best = None
    for tup in np.ndindex(n, n, n):
        if len(set(tup)) < 3:
            continue
        sig = t.init_signature(0, t.color_of(tup, 0))
        s = tuple(float(x) for x in sig)
        p = (s[0] + s[1] + s[2]) * (-s[0] + s[1] + s[2]) * (s[0] - s[1] + s[2]) * (s[0] + s[1] - s[2])
        key = (not (sig[0] < sig[1] < sig[2]), -p, sig, tup)
        if best is None or key < best:
            best = key
    if best is None:
        raise NoNonDegenerateTuple("no tuple of three distinct points")
    return best[3]


def build_rows(t: RefinementTranscript, root: Optional[Sequence[int]] = None) -> NERows:
    """Three rows of new-edge pairs around ``root`` from a 3-WL transcript.

    ``root`` is a tuple of three distinct node indices; by default the
    largest scalene triangle is used.  Each slot's common edge comes from
    its two ``(0, d, d)`` entries; the entry for the replaced vertex itself is
    the root's own previous colour and is dropped.
    """
    if t.variant != WL3:
        raise ValueError(f"edge-equality analysis needs a 3wl transcript, got {t.variant}")
    root = _root_tuple(t, root)
    T = t.rounds
    color = t.color_of(root, T)
    sig = t.init_signature(T, color)
    if sig[0] == 0:
        raise MalformedTranscript("root tuple is degenerate")
    own = t.prev_color(T, color)
    slots = t.neighbors(T, color)
    rows, ces = [], []
    for slot in range(3):
        entries = list(slots[slot])
        if own not in entries:
            raise MalformedTranscript(f"slot {slot + 1} does not contain the root itself")
        entries.remove(own)
        sigs = [t.init_signature(T - 1, c) for c in entries]
        class2 = [s for s in sigs if _is_class2(s)]
        if len(class2) != 2 or class2[0] != class2[1]:
            raise MalformedTranscript(f"slot {slot + 1}: expected two matching (0, d, d) entries, found {class2}")
        ce = int(class2[0][1])
        externals = [s for s in sigs if s[0] > 0]
        if len(externals) != t.n - 3:
            raise MalformedTranscript(f"slot {slot + 1}: {len(externals)} external entries for n={t.n}")
        rows.append(tuple(sorted(_remove_one(s, ce)[0] for s in externals)))
        ces.append(ce)
    if sorted(ces) != sorted(sig):
        raise MalformedTranscript("common edges do not reproduce the root signature")
    return NERows(tuple(rows), tuple(ces), tuple(sig))


def rows_from_ticks(D: DistanceMatrix, root: Sequence[int]) -> tuple:
    """Rows plus the real apex triples, computed straight from a distance matrix."""
    a, b, c = root
    t = D.ticks
    triples = [(int(t[j, a]), int(t[j, b]), int(t[j, c])) for j in range(D.n) if j not in root]
    rows = (
        tuple(sorted(tuple(sorted((rb, rc))) for _, rb, rc in triples)),
        tuple(sorted(tuple(sorted((ra, rc))) for ra, _, rc in triples)),
        tuple(sorted(tuple(sorted((ra, rb))) for ra, rb, _ in triples)),
    )
    ner = NERows(rows, (int(t[b, c]), int(t[a, c]), int(t[a, b])), tuple(sorted((t[a, b], t[b, c], t[a, c]))))
    return ner, triples


def reference_grouping(rows: NERows, triples: Sequence[tuple]) -> Grouping:
    """The grouping whose groups have the given apex triples (the real one)."""
    free = [list(range(rows.size)) for _ in range(3)]
    groups, orient = [], []
    for r_a, r_b, r_c in triples:
        wanted = [(r_b, r_c), (r_a, r_c), (r_a, r_b)]
        g, o = [], []
        for slot, (x, y) in enumerate(wanted):
            key = tuple(sorted((x, y)))
            idx = next((i for i in free[slot] if rows.rows[slot][i] == key), None)
            if idx is None:
                raise ValueError(f"triple {(r_a, r_b, r_c)} does not fit the rows")
            free[slot].remove(idx)
            g.append(idx)
            o.append(0 if rows.rows[slot][idx][0] == x else 1)
        groups.append(tuple(g))
        orient.append(tuple(o))
    order = sorted(range(len(groups)), key=lambda k: groups[k][0])
    return Grouping(tuple(groups[k] for k in order), tuple(orient[k] for k in order))


def _bits(pair) -> tuple:
    return (0,) if pair[0] == pair[1] else (0, 1)


def enumerate_groupings(rows: NERows, budget: int = DEFAULT_BUDGET) -> Iterator[Grouping]:
    """Yield every grouping whose splices only join equal lengths.

    Group order is fixed by row 1's index order.  Orientation bits are
    enumerated only for pairs with two distinct values.  ``budget`` caps the
    number of partial groups examined; exceeding it raises ``BudgetExceeded``
    after the groupings found so far have been yielded.
    """
    m = rows.size
    r1, r2, r3 = rows.rows
    used2, used3 = [False] * m, [False] * m
    groups, orient = [], []
    spent = 0

    def search(g):
        nonlocal spent
        if g == m:
            yield Grouping(tuple(groups), tuple(orient))
            return
        p1 = r1[g]
        for i2 in range(m):
            if used2[i2]:
                continue
            p2 = r2[i2]
            for o1 in _bits(p1):
                b1, c1 = p1[o1], p1[1 - o1]
                for o2 in _bits(p2):
                    a2, c2 = p2[o2], p2[1 - o2]
                    spent += 1
                    if spent > budget:
                        raise BudgetExceeded(f"grouping budget of {budget} exhausted")
                    if c1 != c2:
                        continue
                    for i3 in range(m):
                        if used3[i3]:
                            continue
                        p3 = r3[i3]
                        for o3 in _bits(p3):
                            if p3[o3] != a2 or p3[1 - o3] != b1:
                                continue
                            used2[i2] = used3[i3] = True
                            groups.append((g, i2, i3))
                            orient.append((o1, o2, o3))
                            yield from search(g + 1)
                            groups.pop()
                            orient.pop()
                            used2[i2] = used3[i3] = False

    yield from search(0)


def search_space_size(rows: NERows) -> int:
    """Number of groupings (matchings times orientations) before feasibility."""
    m = rows.size
    orientations = 1
    for row in rows.rows:
        for pair in row:
            orientations *= len(_bits(pair))
    return math.factorial(m) ** 2 * orientations


def _cells(rows: NERows):
    for slot in range(3):
        for idx in range(rows.size):
            for side in range(2):
                yield (slot, idx, side)


def _splices(g: Grouping, rows: NERows):
    # sides: (slot, idx, bit) gives the value rows[slot][idx][bit]
    for (i1, i2, i3), (o1, o2, o3) in zip(g.groups, g.orientation):
        b1, c1 = (0, i1, o1), (0, i1, 1 - o1)
        a2, c2 = (1, i2, o2), (1, i2, 1 - o2)
        a3, b3 = (2, i3, o3), (2, i3, 1 - o3)
        yield c1, c2
        yield b1, b3
        yield a2, a3


def label_equality_classes(g: Grouping, rows: NERows, reference: Optional[Grouping] = None) -> EqualityClasses:
    """Close the splice constraints of ``g`` (and ``reference``) transitively.

    Numbers are handed out in cell order to the first unlabelled cell of each
    class, so the labelling does not depend on the order splices are added.
    ``feasible`` is False when a class mixes different lengths.
    """
    ds = DisjointSet(list(_cells(rows)))
    for grouping in (g, reference):
        if grouping is None:
            continue
        for x, y in _splices(grouping, rows):
            ds.merge(x, y)
    labels, number = {}, {}
    for cell in _cells(rows):
        root = ds[cell]
        if root not in number:
            number[root] = len(number) + 1
        labels[cell] = number[root]
    lengths = {}
    for (slot, idx, side), lab in labels.items():
        lengths.setdefault(lab, set()).add(rows.rows[slot][idx][side])
    lengths = {lab: tuple(sorted(v)) for lab, v in lengths.items()}
    feasible = all(len(v) == 1 for v in lengths.values())
    return EqualityClasses(labels, lengths, feasible)


def compare_tetrahedra(
    g: Grouping,
    rows: NERows,
    real_triples: Sequence[tuple],
    tol: Tolerance = DEFAULT_TOL,
) -> dict:
    """Which groups of ``g`` close into tetrahedra absent from the real cloud.

    Apex triples are compared as unordered multisets (sorted within each
    triple), the weakest notion of "new".  ``reordered`` counts groups that
    only differ from a real triple by the order of their three values.  A
    group counts as realizable when the base plus its apex distances give a
    non-negative Cayley-Menger volume (within quantization slack); leftover
    triples that are not realizable go to ``unrealizable_new``.
    """
    d_ab, d_bc, d_ca = (x * tol.eps for x in rows.base)
    triples = g.apex_triples(rows)
    realizable = []
    for r_a, r_b, r_c in triples:
        ra, rb, rc = (x * tol.eps for x in (r_a, r_b, r_c))
        v2 = tetrahedron_volume_sq(d_ab, d_ca, ra, d_bc, rb, rc)
        realizable.append(bool(v2 >= -10 * tol.eps))
    real_ordered = Counter(tuple(x) for x in real_triples)
    ordered_left = Counter(triples) - real_ordered
    left = Counter(tuple(sorted(x)) for x in triples) - Counter(tuple(sorted(x)) for x in real_ordered.elements())
    new, bad = [], []
    for key, count in sorted(left.items()):
        k = next(i for i, x in enumerate(triples) if tuple(sorted(x)) == key)
        (new if realizable[k] else bad).extend([list(triples[k])] * count)
    reordered = sum(ordered_left.values()) - sum(left.values())
    return {"new_tetrahedra": new, "unrealizable_new": bad, "realizable": realizable, "reordered": reordered}


@dataclass
class GroupingAnalysis:
    rows: NERows
    feasible: list = field(default_factory=list)
    complete: bool = True
    real_found: Optional[bool] = None
    distinct: int = 0
    findings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "root_signature": list(self.rows.root_signature),
            "common_edges": list(self.rows.common_edges),
            "row_sizes": [len(r) for r in self.rows.rows],
            "feasible_count": len(self.feasible),
            "infeasible_count": search_space_size(self.rows) - len(self.feasible) if self.complete else None,
            "distinct_apex_multisets": self.distinct,
            "real_grouping_found": self.real_found,
            "new_tetrahedron_findings": self.findings,
            "budget_status": "complete" if self.complete else "exhausted",
            "scope": "per-root local comparison",
        }


def analyse_rows(
    rows: NERows,
    real_triples: Optional[Sequence[tuple]] = None,
    budget: int = DEFAULT_BUDGET,
    tol: Tolerance = DEFAULT_TOL,
) -> GroupingAnalysis:
    """Enumerate, label and compare every feasible grouping of ``rows``."""
    out = GroupingAnalysis(rows)
    try:
        for g in enumerate_groupings(rows, budget):
            out.feasible.append(g)
    except BudgetExceeded:
        out.complete = False
    canon = {g.canonical(rows) for g in out.feasible}
    out.distinct = len(canon)
    if real_triples is not None:
        real = tuple(sorted(tuple(x) for x in real_triples))
        out.real_found = real in canon
        reference = reference_grouping(rows, real_triples)
        for g in out.feasible:
            classes = label_equality_classes(g, rows, reference)
            report = compare_tetrahedra(g, rows, real_triples, tol)
            if report["new_tetrahedra"] or report["unrealizable_new"]:
                out.findings.append(
                    {
                        "groups": [list(x) for x in g.groups],
                        "orientation": [list(x) for x in g.orientation],
                        "apex_triples": [list(x) for x in g.apex_triples(rows)],
                        "new_tetrahedra": report["new_tetrahedra"],
                        "unrealizable_new": report["unrealizable_new"],
                        "equality_classes": classes.count,
                        "classes_feasible": classes.feasible,
                    }
                )
    return out
