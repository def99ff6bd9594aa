import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import clouds, regular_tetrahedron
from geowl.errors import CollinearBase, DuplicatePoints, InvalidCloud, NotRealizable, SizeMismatch, TooLargeForExhaustive
from geowl.generate import FamilySpec, random_cloud, transform_cloud
from geowl.geometry import (
    DistanceMatrix,
    PointCloud,
    Tolerance,
    aligned_residual,
    congruent,
    distance_matrix,
    edm_realizable_3d,
    embed_3d,
    is_generic,
    tetrahedron_volume_sq,
    trilaterate,
)


def test_unit_segment_ticks():
    D = distance_matrix(PointCloud([[0, 0, 0], [1, 0, 0]]), Tolerance(1e-6))
    assert D.ticks.tolist() == [[0, 1000000], [1000000, 0]]


def test_equilateral_ticks_equal():
    tri = PointCloud([[0, 0, 0], [1, 0, 0], [0.5, math.sqrt(3) / 2, 0]])
    t = distance_matrix(tri).ticks
    off = t[~np.eye(3, dtype=bool)]
    assert len(set(off.tolist())) == 1


def test_duplicate_points_rejected():
    with pytest.raises(DuplicatePoints):
        PointCloud([[0, 0, 0], [0, 0, 0]])


@pytest.mark.parametrize("bad", [[[0, 0, np.nan]], [[0, np.inf, 0]], np.zeros((0, 3)), [[1, 2]]])
def test_invalid_clouds(bad):
    with pytest.raises(InvalidCloud):
        PointCloud(bad)


def test_distance_matrix_rejects_asymmetry():
    with pytest.raises(ValueError):
        DistanceMatrix(np.array([[0, 1], [2, 0]]), 1e-6)


def test_congruent_to_permutation_and_mirror(rng):
    c = random_cloud(FamilySpec("random", 7, 3))
    perm = transform_cloud(c, "permutation", perm=rng.permutation(7))
    w = congruent(c, perm)
    assert w is not None and sorted(w.permutation) == list(range(7))
    assert w.max_residual <= 1e-6
    assert congruent(c, transform_cloud(c, "reflection", axis=0)) is not None


def test_square_vs_rectangle_not_congruent():
    sq = PointCloud([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]])
    rect = PointCloud([[0, 0, 0], [2, 0, 0], [2, 1, 0], [0, 1, 0]])
    assert congruent(sq, rect) is None


def test_congruent_guards():
    a = random_cloud(FamilySpec("random", 5, 1))
    with pytest.raises(SizeMismatch):
        congruent(a, random_cloud(FamilySpec("random", 6, 1)))
    big = random_cloud(FamilySpec("random", 11, 1))
    with pytest.raises(TooLargeForExhaustive):
        congruent(big, big)


def test_trilaterate_equilateral_side_two():
    s3 = math.sqrt(3)
    sols = trilaterate([0, 0, 0], [2, 0, 0], [1, s3, 0], 2, 2, 2)
    assert len(sols) == 2
    expect = [np.array([1, 1 / s3, math.sqrt(8 / 3)]), np.array([1, 1 / s3, -math.sqrt(8 / 3)])]
    for x, y in zip(sols, expect):
        assert np.allclose(x, y, atol=1e-9)
        for p in ([0, 0, 0], [2, 0, 0], [1, s3, 0]):
            assert abs(np.linalg.norm(x - p) - 2) < 1e-9


def test_trilaterate_in_plane_single_solution():
    a, b, c = np.array([0.0, 0, 0]), np.array([2.0, 0, 0]), np.array([1.0, 1.5, 0])
    sols = trilaterate(a, b, c, 0.0 + np.linalg.norm(c - a), np.linalg.norm(c - b), 0.0)
    assert len(sols) == 1 and np.allclose(sols[0], c, atol=1e-6)


def test_trilaterate_empty_and_collinear():
    s3 = math.sqrt(3)
    assert trilaterate([0, 0, 0], [2, 0, 0], [1, s3, 0], 0.1, 0.1, 0.1) == []
    with pytest.raises(CollinearBase):
        trilaterate([0, 0, 0], [1, 0, 0], [2, 0, 0], 1, 1, 1)


@given(clouds(4, 9), st.integers(0, 10**6))
def test_trilaterate_reproduces_radii(cloud, pick):
    P = cloud.normalized().points
    n = len(P)
    a, b, c, j = [(pick + k) % n for k in range(4)]
    try:
        sols = trilaterate(P[a], P[b], P[c], *(np.linalg.norm(P[j] - P[x]) for x in (a, b, c)))
    except CollinearBase:
        return
    assert sols
    assert min(np.linalg.norm(s - P[j]) for s in sols) < 1e-4
    for s in sols:
        for x in (a, b, c):
            assert abs(np.linalg.norm(s - P[x]) - np.linalg.norm(P[j] - P[x])) <= 2e-6


def test_edm_realizable_examples():
    assert edm_realizable_3d(distance_matrix(random_cloud(FamilySpec("random", 6, 2))))
    e = 10**6
    assert not edm_realizable_3d(DistanceMatrix(np.array([[0, e, 3 * e], [e, 0, e], [3 * e, e, 0]]), 1e-6))
    simplex = DistanceMatrix(np.where(np.eye(5, dtype=bool), 0, e), 1e-6)
    assert not edm_realizable_3d(simplex)


def test_embed_small_cases():
    seg = embed_3d(distance_matrix(PointCloud([[0, 0, 0], [1, 0, 0]])))
    assert seg.n == 2 and abs(np.linalg.norm(seg.points[0] - seg.points[1]) - 1) < 1e-6
    tri = PointCloud([[0, 0, 0], [1, 0, 0], [0.5, math.sqrt(3) / 2, 0]])
    assert congruent(embed_3d(distance_matrix(tri)), tri) is not None
    with pytest.raises(NotRealizable):
        embed_3d(DistanceMatrix(np.where(np.eye(5, dtype=bool), 0, 10**6), 1e-6))


@given(clouds(4, 9))
def test_embed_round_trip(cloud):
    D = distance_matrix(cloud)
    out = embed_3d(D)
    assert np.array_equal(distance_matrix(out).ticks, D.ticks)
    assert congruent(out, cloud) is not None


@given(clouds(3, 8), st.integers(0, 2**31 - 1))
def test_distance_matrix_invariances(cloud, seed):
    rng = np.random.default_rng(seed)
    D = distance_matrix(cloud).ticks
    moved = transform_cloud(cloud, "axis-rotation", axes=tuple(rng.permutation(3)), signs=tuple(rng.choice([-1, 1], 3)))
    moved = transform_cloud(moved, "translation", shift=rng.integers(-3, 4, size=3))
    assert np.array_equal(distance_matrix(moved).ticks, D)
    perm = rng.permutation(cloud.n)
    assert np.array_equal(distance_matrix(transform_cloud(cloud, "permutation", perm=perm)).ticks, D[np.ix_(perm, perm)])


@given(clouds(4, 7), st.integers(0, 2**31 - 1), st.booleans())
def test_congruence_is_an_equivalence(cloud, seed, reflect):
    rng = np.random.default_rng(seed)
    b = transform_cloud(cloud, "permutation", perm=rng.permutation(cloud.n))
    c = transform_cloud(b, "reflection", axis=int(rng.integers(3))) if reflect else b
    other = random_cloud(FamilySpec("random", cloud.n, seed))
    assert congruent(cloud, cloud) is not None
    assert (congruent(cloud, b) is None) == (congruent(b, cloud) is None)
    assert congruent(cloud, c) is not None and congruent(b, c) is not None
    assert (congruent(cloud, other) is None) == (congruent(other, cloud) is None)


def test_aligned_residual_agrees_on_simple_pair():
    c = random_cloud(FamilySpec("random", 6, 9))
    assert aligned_residual(c, transform_cloud(c, "reflection", axis=2)) < 1e-9
    assert aligned_residual(c, random_cloud(FamilySpec("random", 6, 10))) > 1e-3


def test_regular_tetrahedron_volume():
    # unit edges: V = 1 / (6 sqrt 2)
    v2 = tetrahedron_volume_sq(1, 1, 1, 1, 1, 1)
    assert v2 == pytest.approx(1 / 72)
    assert tetrahedron_volume_sq(1, 1, 2, 1, 1, 1) < 0


def test_is_generic():
    assert not is_generic(regular_tetrahedron())
    flat = PointCloud([[0, 0, 0], [1, 0, 0], [0, 1.3, 0], [0.4, 0.7, 0]])
    assert not is_generic(flat)
    assert is_generic(PointCloud([[0, 0, 0], [1, 0.1, 0], [0.2, 1.3, 0.05], [0.3, 0.4, 0.9]]))
