"""Point clouds, quantized distances and the geometric helpers built on them.

Every distance comparison in the package goes through integer *ticks*: the
cloud is scaled to unit diameter and each pairwise distance is rounded to a
multiple of ``eps``.  Two distances are equal iff their ticks are equal.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import orthogonal_procrustes
from scipy.optimize import least_squares, linear_sum_assignment

from .errors import (
    CollinearBase,
    DuplicatePoints,
    InvalidCloud,
    NotRealizable,
    SizeMismatch,
    TooLargeForExhaustive,
)

EXHAUSTIVE_LIMIT = 10


@dataclass(frozen=True)
class Tolerance:
    eps: float = 1e-6

    def __post_init__(self):
        if not (self.eps > 0 and np.isfinite(self.eps)):
            raise ValueError(f"eps must be a positive finite number, got {self.eps!r}")

    @property
    def unit_ticks(self) -> int:
        """Tick count of a unit length (the diameter of a normalized cloud)."""
        return int(round(1.0 / self.eps))


DEFAULT_TOL = Tolerance()


def _pairwise(points: np.ndarray) -> np.ndarray:
    # Squared components are sorted before summing so the result does not
    # depend on the axis order of the coordinates.
    diff = np.abs(points[:, None, :] - points[None, :, :])
    sq = np.sort(diff * diff, axis=-1)
    return np.sqrt(sq[..., 0] + sq[..., 1] + sq[..., 2])


@dataclass(frozen=True, eq=False)
class PointCloud:
    """An ordered set of distinct 3D points.

    The constructor copies ``points`` into a read-only ``(n, 3)`` float array
    and rejects empty, non-finite or coincident input.
    """

    points: np.ndarray
    comment: str = field(default="", compare=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise InvalidCloud(f"expected an (n, 3) array of coordinates, got shape {pts.shape}")
        if pts.shape[0] < 1:
            raise InvalidCloud("a point cloud needs at least one point")
        if not np.all(np.isfinite(pts)):
            raise InvalidCloud("coordinates must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.n > 1:
            d = _pairwise(pts)
            diam = d.max()
            off = d[~np.eye(self.n, dtype=bool)]
            if diam == 0 or off.min() / diam < DEFAULT_TOL.eps / 2:
                raise DuplicatePoints("two points coincide within tolerance")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def __len__(self):
        return self.n

    def __eq__(self, other):
        if not isinstance(other, PointCloud):
            return NotImplemented
        return np.array_equal(self.points, other.points)

    def __hash__(self):
        return hash(self.points.tobytes())

    def diameter(self) -> float:
        return float(_pairwise(self.points).max()) if self.n > 1 else 0.0

    def normalized(self) -> "PointCloud":
        """Centroid at the origin, unit diameter (a single point maps to the origin)."""
        centered = self.points - self.points.mean(axis=0)
        diam = self.diameter()
        if diam > 0:
            centered = centered / diam
        return PointCloud(centered, comment=self.comment)

    def permuted(self, perm: Sequence[int]) -> "PointCloud":
        return PointCloud(self.points[list(perm)], comment=self.comment)


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    """Quantized distances of a unit-diameter cloud, in ticks of ``eps``."""

    ticks: np.ndarray
    eps: float = DEFAULT_TOL.eps

    def __post_init__(self):
        t = np.array(self.ticks, dtype=np.int64)
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise ValueError(f"distance matrix must be square, got shape {t.shape}")
        if not np.array_equal(t, t.T):
            raise ValueError("distance matrix must be symmetric")
        if np.any(np.diag(t) != 0):
            raise ValueError("distance matrix must have a zero diagonal")
        off = t[~np.eye(t.shape[0], dtype=bool)]
        if off.size and off.min() <= 0:
            raise DuplicatePoints("off-diagonal distances must be positive")
        t.setflags(write=False)
        object.__setattr__(self, "ticks", t)

    @property
    def n(self) -> int:
        return self.ticks.shape[0]

    @property
    def lengths(self) -> np.ndarray:
        return self.ticks * self.eps

    def __eq__(self, other):
        if not isinstance(other, DistanceMatrix):
            return NotImplemented
        return self.eps == other.eps and np.array_equal(self.ticks, other.ticks)

    def __hash__(self):
        return hash((self.eps, self.ticks.tobytes()))

    def satisfies_triangle(self, slack: int = 2) -> bool:
        t = self.ticks
        # t[i,k] + t[k,j] >= t[i,j] for every k
        via = t[:, :, None] + t[None, :, :]
        return bool(np.all(via.min(axis=1) + slack >= t))

    def permuted(self, perm: Sequence[int]) -> "DistanceMatrix":
        p = np.asarray(perm)
        return DistanceMatrix(self.ticks[np.ix_(p, p)], self.eps)


@dataclass(frozen=True)
class CongruenceWitness:
    permutation: tuple
    max_residual: float


def distance_matrix(cloud: PointCloud, tol: Tolerance = DEFAULT_TOL) -> DistanceMatrix:
    """Quantized pairwise distances after scaling ``cloud`` to unit diameter.

    >>> distance_matrix(PointCloud([[0, 0, 0], [1, 0, 0]])).ticks.tolist()
    [[0, 1000000], [1000000, 0]]
    """
    if cloud.n == 1:
        return DistanceMatrix(np.zeros((1, 1), dtype=np.int64), tol.eps)
    d = _pairwise(cloud.points)
    diam = d.max()
    if diam == 0:
        raise DuplicatePoints("all points coincide")
    ticks = np.rint(d / diam / tol.eps).astype(np.int64)
    np.fill_diagonal(ticks, 0)
    off = ticks[~np.eye(cloud.n, dtype=bool)]
    if off.min() == 0:
        raise DuplicatePoints("two points coincide at tick resolution")
    return DistanceMatrix(ticks, tol.eps)


def _profiles(t: np.ndarray) -> list:
    return [tuple(sorted(row)) for row in t.tolist()]


def congruent_matrices(a: DistanceMatrix, b: DistanceMatrix) -> Optional[tuple]:
    """Return a permutation ``p`` with ``a[i, j] == b[p[i], p[j]]`` or None.

    Backtracking over node assignments, restricted to nodes with identical
    sorted distance profiles.
    """
    if a.n != b.n:
        raise SizeMismatch(f"clouds have {a.n} and {b.n} points")
    n = a.n
    ta, tb = a.ticks, b.ticks
    pa, pb = _profiles(ta), _profiles(tb)
    if sorted(pa) != sorted(pb):
        return None
    options = [[j for j in range(n) if pb[j] == pa[i]] for i in range(n)]
    order = sorted(range(n), key=lambda i: len(options[i]))
    assign = [-1] * n
    used = [False] * n

    def extend(depth):
        if depth == n:
            return True
        i = order[depth]
        for j in options[i]:
            if used[j]:
                continue
            ok = True
            for prev in order[:depth]:
                if ta[i, prev] != tb[j, assign[prev]]:
                    ok = False
                    break
            if not ok:
                continue
            assign[i] = j
            used[j] = True
            if extend(depth + 1):
                return True
            used[j] = False
            assign[i] = -1
        return False

    return tuple(assign) if extend(0) else None


def congruent(a: PointCloud, b: PointCloud, tol: Tolerance = DEFAULT_TOL) -> Optional[CongruenceWitness]:
    """Exhaustive congruence test (rigid motion, reflection and uniform scale).

    Both clouds are compared through their quantized distance matrices, so a
    reflected copy is congruent and so is a rescaled one.  Raises
    ``TooLargeForExhaustive`` above ``EXHAUSTIVE_LIMIT`` points.
    """
    if a.n != b.n:
        raise SizeMismatch(f"clouds have {a.n} and {b.n} points")
    if a.n > EXHAUSTIVE_LIMIT:
        raise TooLargeForExhaustive(f"n={a.n} exceeds the exhaustive limit {EXHAUSTIVE_LIMIT}")
    da, db = distance_matrix(a, tol), distance_matrix(b, tol)
    perm = congruent_matrices(da, db)
    if perm is None:
        return None
    la = _pairwise(a.points) / max(a.diameter(), 1e-300)
    lb = _pairwise(b.points) / max(b.diameter(), 1e-300)
    p = np.asarray(perm)
    resid = float(np.abs(la - lb[np.ix_(p, p)]).max()) if a.n > 1 else 0.0
    return CongruenceWitness(perm, resid)


def aligned_residual(a: PointCloud, b: PointCloud) -> float:
    """Best superposition residual of two unit-diameter clouds over rotations,
    reflections and node correspondences.

    Coordinate-space alignment, independent of the distance-matrix route:
    both clouds are put in their principal-axis frames, every sign choice of
    the axes is tried, points are matched by optimal assignment and the match
    is refined with an orthogonal Procrustes fit.  Returns the largest
    per-point distance after alignment.  Reliable for clouds whose inertia
    tensor has distinct eigenvalues.
    """
    if a.n != b.n:
        raise SizeMismatch(f"clouds have {a.n} and {b.n} points")
    xa, xb = a.normalized().points, b.normalized().points
    _, va = np.linalg.eigh(xa.T @ xa)
    _, vb = np.linalg.eigh(xb.T @ xb)
    ca, cb = xa @ va, xb @ vb
    best = np.inf
    for signs in itertools.product((1.0, -1.0), repeat=3):
        flipped = cb * np.array(signs)
        cost = np.linalg.norm(ca[:, None, :] - flipped[None, :, :], axis=-1)
        rows, cols = linear_sum_assignment(cost)
        src, dst = xa[rows], xb[cols]
        rot, _ = orthogonal_procrustes(src, dst)
        resid = np.linalg.norm(src @ rot - dst, axis=1).max()
        best = min(best, float(resid))
    return best


def triangle_area(p_a, p_b, p_c) -> float:
    return 0.5 * float(np.linalg.norm(np.cross(np.subtract(p_b, p_a), np.subtract(p_c, p_a))))


def trilaterate(p_a, p_b, p_c, r_a, r_b, r_c, tol: Tolerance = DEFAULT_TOL) -> list:
    """Intersect three spheres centred on a non-collinear base triangle.

    Returns 0, 1 or 2 points.  Two solutions are mirror images across the
    base plane, ordered with the one on the positive side of
    ``(p_b - p_a) x (p_c - p_a)`` first; they merge into one in-plane
    solution when closer than ``2 * eps``.
    """
    p_a, p_b, p_c = (np.asarray(p, dtype=float) for p in (p_a, p_b, p_c))
    ab, ac = p_b - p_a, p_c - p_a
    side = max(np.linalg.norm(ab), np.linalg.norm(ac), np.linalg.norm(p_c - p_b))
    if triangle_area(p_a, p_b, p_c) < tol.eps * side * side or side == 0:
        raise CollinearBase("base triangle is (nearly) collinear")
    d = np.linalg.norm(ab)
    ex = ab / d
    i = float(ex @ ac)
    ey = ac - i * ex
    j = np.linalg.norm(ey)
    ey = ey / j
    ez = np.cross(ex, ey)
    x = (r_a * r_a - r_b * r_b + d * d) / (2 * d)
    y = (r_a * r_a - r_c * r_c + i * i + j * j) / (2 * j) - (i / j) * x
    z2 = r_a * r_a - x * x - y * y
    scale = max(side, r_a, r_b, r_c)
    if z2 < -2 * tol.eps * scale * scale:
        return []
    z = np.sqrt(max(z2, 0.0))
    foot = p_a + x * ex + y * ey
    if z <= tol.eps:
        return [foot]
    return [foot + z * ez, foot - z * ez]


def cayley_menger(d2: np.ndarray) -> float:
    """Cayley-Menger determinant of a squared-distance matrix."""
    m = d2.shape[0]
    cm = np.ones((m + 1, m + 1))
    cm[0, 0] = 0.0
    cm[1:, 1:] = d2
    return float(np.linalg.det(cm))


def tetrahedron_volume_sq(d_ab, d_ac, d_ad, d_bc, d_bd, d_cd) -> float:
    """Squared volume from the six edge lengths (negative when unrealizable)."""
    d = np.array(
        [
            [0, d_ab, d_ac, d_ad],
            [d_ab, 0, d_bc, d_bd],
            [d_ac, d_bc, 0, d_cd],
            [d_ad, d_bd, d_cd, 0],
        ],
        dtype=float,
    )
    return cayley_menger(d * d) / 288.0


def gram_matrix(D: DistanceMatrix) -> np.ndarray:
    L = D.lengths
    n = D.n
    J = np.eye(n) - np.full((n, n), 1.0 / n)
    return -0.5 * J @ (L * L) @ J


def _eig_threshold(D: DistanceMatrix) -> float:
    # Quantization moves each squared length by about eps, so the Gram
    # spectrum is perturbed by O(n * eps) on a unit-diameter matrix.
    return 10.0 * D.n * D.eps


def edm_realizable_3d(D: DistanceMatrix, tol: Tolerance = DEFAULT_TOL) -> bool:
    """True iff ``D`` is (up to quantization) a Euclidean distance matrix of rank <= 3."""
    if D.n <= 1:
        return True
    if not D.satisfies_triangle():
        return False
    w = np.linalg.eigvalsh(gram_matrix(D))
    thr = _eig_threshold(D)
    if w.min() < -thr:
        return False
    return int(np.sum(w > thr)) <= 3


def classical_mds(D: DistanceMatrix, dim: int = 3) -> np.ndarray:
    w, v = np.linalg.eigh(gram_matrix(D))
    idx = np.argsort(w)[::-1][:dim]
    w, v = np.clip(w[idx], 0, None), v[:, idx]
    coords = v * np.sqrt(w)
    if coords.shape[1] < dim:
        coords = np.hstack([coords, np.zeros((D.n, dim - coords.shape[1]))])
    return coords


FIT_MARGINS = (0.3, 0.2, 0.1, 0.05)
LOOSE_MARGINS = (0.4, 0.45, 0.48)


def fit_to_ticks(points: np.ndarray, D: DistanceMatrix, max_passes: int = 4) -> np.ndarray:
    """Adjust ``points`` until their quantized distance matrix equals ``D``.

    ``D`` comes from rounding a real cloud, so it is only realizable to within
    half a tick per entry.  A plain least-squares fit gets close; further
    passes use a dead-zone residual that only pushes entries lying outside a
    shrinking band around their target tick.  Rigid configurations (collinear
    or coplanar runs of points) can force some entries close to half a tick,
    so if the tight bands fail, looser bands are tried from the plain fit.
    The diameter pairs are weighted heavily so that renormalization by the
    fitted diameter is a no-op.
    Raises ``NotRealizable`` if no pass reproduces ``D`` exactly.
    """
    n = D.n
    x0 = np.asarray(points, dtype=float).reshape(n, 3)
    if n == 1:
        return np.zeros((1, 3))
    iu = np.triu_indices(n, 1)
    target = D.ticks[iu].astype(float)
    weight = np.where(target == target.max(), 30.0, 1.0)
    eps = D.eps
    tol = Tolerance(eps)

    def errors(flat):
        p = flat.reshape(n, 3)
        d = np.linalg.norm(p[iu[0]] - p[iu[1]], axis=1)
        return d / eps - target

    def matches(p):
        try:
            return distance_matrix(PointCloud(p), tol) == D
        except (InvalidCloud, DuplicatePoints):
            return False

    x = x0 * (target.max() * eps / max(_pairwise(x0).max(), 1e-300))
    if matches(x):
        return x
    fit = least_squares(lambda f: weight * errors(f), x.ravel(), method="trf", x_scale=1.0)
    plain = fit.x.reshape(n, 3)

    def dead_zone(f, m):
        e = errors(f)
        r = np.sign(e) * np.maximum(np.abs(e) - m, 0.0)
        return np.where(weight > 1, weight * e, r)

    for margins in (FIT_MARGINS[:max_passes], LOOSE_MARGINS):
        x = plain
        for margin in margins:
            if matches(x):
                return x
            x = least_squares(dead_zone, x.ravel(), method="trf", args=(margin,)).x.reshape(n, 3)
        if matches(x):
            return x
    raise NotRealizable("could not place points reproducing the distance matrix at tick resolution")


def embed_3d(D: DistanceMatrix, tol: Tolerance = DEFAULT_TOL) -> PointCloud:
    """Materialize ``D`` as a 3D cloud whose quantized distances equal ``D``."""
    if not edm_realizable_3d(D, tol):
        raise NotRealizable("distance matrix is not a rank-3 Euclidean distance matrix")
    if D.n == 1:
        return PointCloud(np.zeros((1, 3)))
    return PointCloud(fit_to_ticks(classical_mds(D), D))


def min_plane_height(cloud: PointCloud) -> float:
    """Smallest distance from any point to the plane through any three others,
    on the unit-diameter cloud.  Collinear triples count as height 0."""
    P = cloud.normalized().points
    n = len(P)
    best = math.inf
    for a, b, c in itertools.combinations(range(n), 3):
        normal = np.cross(P[b] - P[a], P[c] - P[a])
        norm = np.linalg.norm(normal)
        if norm < 1e-12:
            return 0.0
        others = [j for j in range(n) if j not in (a, b, c)]
        if others:
            h = np.abs((P[others] - P[a]) @ normal) / norm
            best = min(best, float(h.min()))
    return best


def is_generic(cloud: PointCloud, tol: Tolerance = DEFAULT_TOL, min_height: float = 1e-2, min_gap_ticks: int = 10) -> bool:
    """No near-coplanar quadruple and no two pairwise distances within ``min_gap_ticks``.

    This is the working meaning of "generic" for candidate-set counts: with
    every point well off every face plane, no mirror pair can merge.
    """
    if cloud.n < 3:
        return True
    t = distance_matrix(cloud, tol).ticks
    d = np.sort(t[np.triu_indices(cloud.n, 1)])
    if len(d) > 1 and np.diff(d).min() < min_gap_ticks:
        return False
    return cloud.n < 4 or min_plane_height(cloud) >= min_height
