"""k-WL / k-FWL colour refinement (k = 2, 3) on complete distance graphs.

Colours are canonical integers: every round the tuple signatures are sorted
lexicographically and numbered in that order, so two runs that see the same
multiset of signatures assign the same ids.  The per-round signature tables
therefore double as an invertible record of the hash function, which is what
lets :mod:`geowl.reconstruct` unroll a colour back into its WL tree.

Signature layout of round ``t`` (one int64 row per colour)::

    FWL:  [prev, code_0, ..., code_{n-1}]     codes sorted ascending
    WL :  [prev, slot_1 (n ids), ..., slot_k (n ids)]   each block sorted

A FWL code packs the joint replacement colours in base ``radix`` (the colour
count of round ``t - 1``): ``(c1 * radix + c2) * radix + c3`` for k = 3 and
``c1 * radix + c2`` for k = 2, so sorting codes sorts the tuples.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence, Union

import numpy as np

from .errors import DepthExceedsRounds, NoConvergence
from .geometry import DEFAULT_TOL, DistanceMatrix, PointCloud, Tolerance, distance_matrix

MIN_ROUNDS = 3


@dataclass(frozen=True)
class Variant:
    k: int
    flavor: str  # "WL" or "FWL"

    def __post_init__(self):
        if self.k not in (2, 3) or self.flavor not in ("WL", "FWL"):
            raise ValueError(f"unsupported variant k={self.k!r} flavor={self.flavor!r}")

    @property
    def joint(self) -> bool:
        return self.flavor == "FWL"

    @property
    def name(self) -> str:
        return f"{self.k}{self.flavor.lower()}"

    @classmethod
    def parse(cls, text: Union[str, "Variant"]) -> "Variant":
        if isinstance(text, Variant):
            return text
        s = text.strip().lower().replace("-", "").replace("_", "")
        for v in ALL_VARIANTS:
            if s == v.name:
                return v
        raise ValueError(f"unknown variant {text!r}; expected one of 2wl, 2fwl, 3wl, 3fwl")

    def __str__(self):
        return self.name


WL2 = Variant(2, "WL")
FWL2 = Variant(2, "FWL")
WL3 = Variant(3, "WL")
FWL3 = Variant(3, "FWL")
ALL_VARIANTS = (WL2, FWL2, WL3, FWL3)


def _canonical_ids(rows: np.ndarray):
    """Number distinct rows in lexicographic order.

    Returns ``(ids, unique_rows, counts)`` with ``ids[i]`` the rank of
    ``rows[i]`` among the distinct rows.
    """
    order = np.lexsort(rows.T[::-1])
    srt = rows[order]
    new = np.ones(len(srt), dtype=bool)
    new[1:] = np.any(srt[1:] != srt[:-1], axis=1)
    rank_sorted = np.cumsum(new) - 1
    ids = np.empty(len(rows), dtype=np.int64)
    ids[order] = rank_sorted
    uniq = srt[new]
    counts = np.bincount(rank_sorted)
    return ids, uniq, counts


def initial_signatures(D: DistanceMatrix, k: int) -> np.ndarray:
    """Initial tuple signatures, one row per tuple in row-major tuple order.

    k = 3: the tuple's three pairwise distances sorted ascending.
    k = 2: the single distance.
    """
    t = D.ticks
    n = D.n
    if k == 2:
        return t.reshape(n * n, 1).copy()
    ab = np.broadcast_to(t[:, :, None], (n, n, n))
    bc = np.broadcast_to(t[None, :, :], (n, n, n))
    ca = np.broadcast_to(t.T[:, None, :], (n, n, n))
    sig = np.sort(np.stack([ab, bc, ca], axis=-1), axis=-1)
    return sig.reshape(n ** 3, 3)


def init_colors(D: Union[PointCloud, DistanceMatrix], variant: Variant, tol: Tolerance = DEFAULT_TOL):
    """Round-0 colouring as ``(colors, init_table)``.

    ``colors`` has shape ``(n,) * k``; ``init_table[c]`` is the signature
    (tuple of ticks) of colour ``c``.
    """
    if isinstance(D, PointCloud):
        D = distance_matrix(D, tol)
    variant = Variant.parse(variant)
    sig = initial_signatures(D, variant.k)
    ids, uniq, _ = _canonical_ids(sig)
    colors = ids.reshape((D.n,) * variant.k)
    return colors, [tuple(int(x) for x in row) for row in uniq]


def _neighbor_blocks(C: np.ndarray, k: int):
    """Replacement colours, each shaped ``tuple-shape + (n,)`` over j."""
    if k == 2:
        # (i, j) -> slot 1 replaced: C[w, j]; slot 2 replaced: C[i, w]
        x1 = np.broadcast_to(C.T[None, :, :], C.shape + (C.shape[0],))
        x2 = np.broadcast_to(C[:, None, :], C.shape + (C.shape[0],))
        return [x1, x2]
    n = C.shape[0]
    full = (n, n, n, n)
    x1 = np.broadcast_to(np.moveaxis(C, 0, -1)[None, :, :, :], full)  # C[j, b, c]
    x2 = np.broadcast_to(np.moveaxis(C, 1, -1)[:, None, :, :], full)  # C[a, j, c]
    x3 = np.broadcast_to(C[:, :, None, :], full)  # C[a, b, j]
    return [x1, x2, x3]


def signature_rows(C: np.ndarray, variant: Variant, radix: int) -> np.ndarray:
    k = variant.k
    blocks = [b.astype(np.int64) for b in _neighbor_blocks(C, k)]
    m = C.size
    n = C.shape[0]
    prev = C.reshape(m, 1).astype(np.int64)
    if variant.joint:
        code = blocks[0]
        for b in blocks[1:]:
            code = code * radix + b
        parts = [np.sort(code.reshape(m, n), axis=1)]
    else:
        parts = [np.sort(b.reshape(m, n), axis=1) for b in blocks]
    return np.hstack([prev] + parts)


def refine_step(C: np.ndarray, variant: Variant, radix: Optional[int] = None):
    """One refinement round.

    Returns ``(new_colors, table_rows, counts)``: ``table_rows[c]`` is the
    signature row of new colour ``c`` (see module docstring for the layout).
    """
    variant = Variant.parse(variant)
    if radix is None:
        radix = int(C.max()) + 1
    rows = signature_rows(C, variant, radix)
    ids, uniq, counts = _canonical_ids(rows)
    return ids.reshape(C.shape), uniq, counts


@dataclass(frozen=True, eq=False)
class Fingerprint:
    """Canonical summary of a refinement run.

    ``histograms[t]`` lists the distinct round-``t`` signatures with their
    multiplicities.  Because colour ids are canonical ranks, two clouds get
    equal fingerprints iff every round sees the same signature multiset,
    i.e. iff the refinement cannot tell them apart.
    """

    variant: str
    n: int
    histograms: tuple  # per round: tuple of (signature tuple, count)

    @cached_property
    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(f"{self.variant}|{self.n}|{len(self.histograms)}".encode())
        for hist in self.histograms:
            h.update(b"#")
            for sig, count in hist:
                h.update(np.asarray(sig, dtype=np.int64).tobytes())
                h.update(b":" + str(int(count)).encode() + b";")
        return h.hexdigest()

    @property
    def entries(self) -> tuple:
        """Final-round (signature, multiplicity) pairs."""
        return self.histograms[-1]

    def __eq__(self, other):
        if not isinstance(other, Fingerprint):
            return NotImplemented
        return self.digest == other.digest

    def __hash__(self):
        return hash(self.digest)


def _histogram(rows: np.ndarray, counts: np.ndarray) -> tuple:
    return tuple((tuple(int(x) for x in r), int(c)) for r, c in zip(rows, counts))


@dataclass(frozen=True, eq=False)
class RefinementTranscript:
    variant: Variant
    n: int
    eps: float
    init_table: list  # colour id -> sorted distance tuple (ticks)
    rule_rows: list  # rule_rows[t - 1]: int64 (colours_t, width) array, t = 1..rounds
    colorings: list  # colorings[t]: colour array of shape (n,) * k, t = 0..rounds

    @property
    def rounds(self) -> int:
        return len(self.rule_rows)

    def num_colors(self, t: int) -> int:
        return len(self.init_table) if t == 0 else len(self.rule_rows[t - 1])

    def radix(self, t: int) -> int:
        """Packing base of the round-``t`` table (colour count of round ``t - 1``)."""
        return self.num_colors(t - 1)

    @cached_property
    def _base(self) -> list:
        base = [np.arange(len(self.init_table))]
        for rows in self.rule_rows:
            base.append(base[-1][rows[:, 0]])
        return base

    def init_signature(self, t: int, color: int) -> tuple:
        """Initial signature reached by following ``color``'s ancestry down to round 0."""
        return self.init_table[int(self._base[t][color])]

    def prev_color(self, t: int, color: int) -> int:
        return int(self.rule_rows[t - 1][color, 0]) if t > 0 else int(color)

    def neighbors(self, t: int, color: int) -> np.ndarray:
        """Round-``t - 1`` neighbour colours of a round-``t`` colour.

        FWL: ``(n, k)`` array of joint replacement tuples (sorted by code).
        WL:  ``(k, n)`` array, one sorted multiset per slot.
        """
        if t < 1:
            raise DepthExceedsRounds("round-0 colours have no neighbours")
        row = self.rule_rows[t - 1][color, 1:]
        k, n = self.variant.k, self.n
        if not self.variant.joint:
            return row.reshape(k, n).copy()
        r = self.radix(t)
        out = np.empty((n, k), dtype=np.int64)
        code = row.copy()
        for slot in range(k - 1, -1, -1):
            out[:, slot] = code % r
            code = code // r
        return out

    def color_of(self, tup: Sequence[int], t: Optional[int] = None) -> int:
        t = self.rounds if t is None else t
        return int(self.colorings[t][tuple(tup)])

    def class_sizes(self, t: int) -> np.ndarray:
        return np.bincount(self.colorings[t].ravel(), minlength=self.num_colors(t))

    @cached_property
    def fingerprint(self) -> Fingerprint:
        hists = [
            _histogram(np.array(self.init_table, dtype=np.int64).reshape(len(self.init_table), -1), self.class_sizes(0))
        ]
        for t, rows in enumerate(self.rule_rows, start=1):
            hists.append(_histogram(rows, self.class_sizes(t)))
        return Fingerprint(self.variant.name, self.n, tuple(hists))


def refine_distances(D: DistanceMatrix, variant: Variant) -> RefinementTranscript:
    """Refine the complete distance graph ``D`` to a stable colouring."""
    variant = Variant.parse(variant)
    C, table = init_colors(D, variant)
    colorings = [C]
    rules = []
    cap = max(D.n ** variant.k, MIN_ROUNDS)
    stable_at = None
    while True:
        t = len(rules) + 1
        if t > cap:
            raise NoConvergence(f"partition still refining after {cap} rounds")
        prev_count = int(C.max()) + 1
        C, rows, _ = refine_step(C, variant, prev_count)
        rules.append(rows)
        colorings.append(C)
        if stable_at is None and len(rows) == prev_count:
            stable_at = t
        if stable_at is not None and t >= MIN_ROUNDS:
            break
    return RefinementTranscript(variant, D.n, D.eps, table, rules, colorings)


def refine_to_stable(cloud: PointCloud, variant: Variant, tol: Tolerance = DEFAULT_TOL) -> RefinementTranscript:
    return refine_distances(distance_matrix(cloud, tol), variant)


def fingerprint_of(t: RefinementTranscript) -> Fingerprint:
    return t.fingerprint


@dataclass
class TreeNode:
    color: int
    round: int
    signature: tuple
    # FWL: list of k-tuples of TreeNode; WL: list of k lists of TreeNode
    children: list = field(default_factory=list)

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass
class WLTree:
    root: tuple
    variant: Variant
    depth: int
    node: TreeNode

    def level(self, d: int) -> list:
        """All nodes at distance ``d`` from the root (with multiplicity)."""
        nodes = [self.node]
        for _ in range(d):
            nxt = []
            for nd in nodes:
                for group in nd.children:
                    nxt.extend(group)
            nodes = nxt
        return nodes


def unroll_tree(t: RefinementTranscript, root: Sequence[int], depth: int) -> WLTree:
    """Expand the final colour of ``root`` through ``depth`` rounds of rules.

    Subtrees are shared between equal (round, colour) pairs, so the object
    stays small even though the logical tree has ``(k n) ** depth`` leaves.
    """
    if depth > t.rounds:
        raise DepthExceedsRounds(f"depth {depth} exceeds the {t.rounds} recorded rounds")
    if depth < 0:
        raise ValueError("depth must be non-negative")
    root = tuple(int(x) for x in root)
    top = t.rounds
    return WLTree(root, t.variant, depth, expand(t, top, t.color_of(root, top), depth))


def expand(t: RefinementTranscript, r: int, color: int, depth: int) -> TreeNode:
    """Tree of ``depth`` levels below the round-``r`` colour ``color``."""
    if depth > r:
        raise DepthExceedsRounds(f"cannot expand {depth} levels below round {r}")
    cache = {}

    def build(r, color, remaining):
        key = (r, color, remaining)
        if key in cache:
            return cache[key]
        node = TreeNode(int(color), r, t.init_signature(r, color))
        cache[key] = node
        if remaining:
            nb = t.neighbors(r, color)
            if t.variant.joint:
                node.children = [tuple(build(r - 1, c, remaining - 1) for c in row) for row in nb]
            else:
                node.children = [[build(r - 1, c, remaining - 1) for c in slot] for slot in nb]
        return node

    return build(r, color, depth)
