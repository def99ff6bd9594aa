import math

import numpy as np
import pytest
from hypothesis import given, settings

from conftest import clouds, regular_tetrahedron
from geowl.errors import (
    AmbiguousNode,
    CountMismatch,
    ImpossibleHistogram,
    InconsistentPairs,
    MalformedTranscript,
    NoNonDegenerateTuple,
)
from geowl.generate import FamilySpec, random_cloud, symmetric_cloud
from geowl.geometry import PointCloud, congruent, distance_matrix, is_generic, trilaterate
from geowl.reconstruct import (
    ApexDistances,
    CandidatePointSet,
    NeighborFaces,
    apex_assignments,
    candidate_points,
    classify_ne_case,
    extract_new_edges,
    identify_common_edges,
    intersect_cps,
    reconstruct,
    resolve_apex_distances,
    select_root,
    trick_statistics,
)
from geowl.refinement import FWL3, RefinementTranscript, refine_to_stable, unroll_tree
from geowl.geometry import tetrahedron_volume_sq


def _tree(cloud, root):
    t = refine_to_stable(cloud, FWL3)
    return unroll_tree(t, root, 1)


def test_select_root_regular_tetrahedron():
    t = refine_to_stable(regular_tetrahedron(), FWL3)
    root = select_root(t)
    s = root.signature
    assert s[0] > 0 and s[0] == s[1] == s[2]


def test_select_root_prefers_scalene():
    t = refine_to_stable(random_cloud(FamilySpec("random", 6, 11)), FWL3)
    s = select_root(t).signature
    assert s[0] < s[1] < s[2]


def test_select_root_needs_three_points():
    t = refine_to_stable(PointCloud([[0, 0, 0], [1, 0, 0]]), FWL3)
    with pytest.raises(NoNonDegenerateTuple):
        select_root(t)


def test_common_edges_345():
    # a = (0,0,0), b = (3,0,0), c = (0,4,0): d(b,c) = 5 is the diameter of the base
    cloud = PointCloud([[0, 0, 0], [3, 0, 0], [0, 4, 0], [1, 1, 2]])
    D = distance_matrix(cloud).ticks
    ces = identify_common_edges(_tree(cloud, (0, 1, 2)))
    assert [c.ce_length for c in ces] == [D[1, 2], D[0, 2], D[0, 1]]
    node = _tree(cloud, (0, 1, 2)).node
    class2 = [e[0].signature for e in node.children if e[0].signature[0] == 0 and e[0].signature[1] == e[0].signature[2]]
    assert class2 == [(0, D[1, 2], D[1, 2])] * 2


def test_common_edges_equilateral():
    ces = identify_common_edges(_tree(regular_tetrahedron(), (0, 1, 2)))
    assert len({c.ce_length for c in ces}) == 1


def test_common_edges_tampered():
    node = _tree(random_cloud(FamilySpec("random", 5, 2)), (0, 1, 2)).node
    drop = next(i for i, e in enumerate(node.children) if e[0].signature[0] == 0 and e[0].signature[1] == e[0].signature[2])
    node.children = node.children[:drop] + node.children[drop + 1 :]
    with pytest.raises(MalformedTranscript):
        identify_common_edges(node)


def test_new_edges_match_apex_distances():
    cloud = random_cloud(FamilySpec("random", 6, 3))
    D = distance_matrix(cloud).ticks
    tree = _tree(cloud, (0, 1, 2))
    faces = extract_new_edges(tree, identify_common_edges(tree))
    expected = sorted(
        (tuple(sorted((D[j, 1], D[j, 2]))), tuple(sorted((D[j, 0], D[j, 2]))), tuple(sorted((D[j, 0], D[j, 1]))))
        for j in range(3, 6)
    )
    assert sorted(tuple(tuple(int(v) for v in p) for p in f.pairs) for f in faces) == expected
    assert all(classify_ne_case(f.ne_set) == 1 for f in faces)


def test_isosceles_external_is_case_two():
    # apex above the perpendicular bisector of ab: r_a = r_b != r_c
    cloud = PointCloud([[0, 0, 0], [2, 0, 0], [0.3, 1.7, 0], [1, 0.2, 1.3]])
    tree = _tree(cloud, (0, 1, 2))
    (faces,) = extract_new_edges(tree, identify_common_edges(tree))
    assert classify_ne_case(faces.ne_set) == 2


@pytest.mark.parametrize(
    "ne_set, case",
    [((1, 2, 3, 1, 2, 3), 1), ((1, 1, 1, 1, 2, 2), 2), ((1, 1, 1, 1, 1, 1), 3)],
)
def test_classify_cases(ne_set, case):
    assert classify_ne_case(ne_set) == case


@pytest.mark.parametrize("bad", [(1, 1, 1, 2, 2, 2), (1, 2, 3, 4, 5, 6), (1, 1, 1, 1, 1, 2), (1, 2)])
def test_classify_rejects(bad):
    with pytest.raises(ImpossibleHistogram):
        classify_ne_case(bad)


def test_resolve_unique_assignment():
    f = NeighborFaces(((2, 3), (1, 3), (1, 2)))
    assert resolve_apex_distances(f).as_tuple() == (1, 2, 3)
    assert resolve_apex_distances(NeighborFaces(((5, 5), (5, 5), (5, 5)))).as_tuple() == (5, 5, 5)


def test_resolve_inconsistent():
    with pytest.raises(InconsistentPairs):
        resolve_apex_distances(NeighborFaces(((1, 1), (2, 2), (3, 3))) if False else NeighborFaces(((1, 2), (3, 3), (1, 2))))


def test_case_two_alternatives_congruent():
    q, p = 1_000_000, 1_300_000
    f = NeighborFaces(((q, q), (p, q), (p, q)))
    options = apex_assignments(f)
    assert len(options) >= 1
    base = (1_000_000, 1_000_000, 1_000_000)
    s3 = math.sqrt(3)
    a, b, c = np.array([0, 0, 0.0]), np.array([1, 0, 0.0]), np.array([0.5, s3 / 2, 0])
    tets = []
    for o in options:
        x = trilaterate(a, b, c, *(v * 1e-6 for v in o.as_tuple()))[0]
        tets.append(PointCloud([a, b, c, x]))
    assert all(congruent(tets[0], t) is not None for t in tets[1:])


def test_candidate_points_sizes():
    s3 = math.sqrt(3)
    face = np.array([[0, 0, 0.0], [1, 0, 0], [0.5, s3 / 2, 0]])
    ext = [ApexDistances(1_000_000, 1_000_000, 1_000_000), ApexDistances(800_000, 900_000, 700_000)]
    assert len(candidate_points(face, ext[:1], 0)) == 0
    cp = candidate_points(face, ext, 0)
    assert len(cp) == 2 and cp.merged == 0
    assert cp.anchor[2] > 0
    # exactly coplanar external: mirror pair merges
    x = np.array([0.4, 0.3, 0.0])
    r = [int(round(np.linalg.norm(x - v) * 1e6)) for v in face]
    cp = candidate_points(face, [ext[0], ApexDistances(*r)], 0)
    assert len(cp) == 1 and cp.merged == 1


def _cp(points_pairs, seps=None):
    pairs = [[np.asarray(p, dtype=float) for p in pair] for pair in points_pairs]
    seps = seps or [float(np.linalg.norm(p[0] - p[-1])) for p in pairs]
    return CandidatePointSet(np.eye(3), np.zeros(3), pairs, list(range(len(pairs))), seps)


def test_intersect_vacuous():
    empty = _cp([])
    assert intersect_cps(empty, empty, empty, empty, tol=1e-3) == []


def test_intersect_deletes_and_confirms_mirror():
    up, down = [0, 0, 1.0], [0, 0, -1.0]
    cp1 = _cp([[up, down]])
    full = _cp([[up, down]])
    cp3 = _cp([[up, [5, 5, 5]]])
    (x,) = intersect_cps(cp1, full, cp3, full, tol=1e-3)
    assert np.allclose(x, up)


def test_intersect_ambiguous_pair():
    up, down = [0, 0, 1.0], [0, 0, -1.0]
    cp = _cp([[up, down]])
    with pytest.raises(AmbiguousNode):
        intersect_cps(cp, cp, cp, cp, tol=1e-3)


def test_intersect_lost_node():
    cp1 = _cp([[[0, 0, 1.0], [0, 0, -1.0]]])
    other = _cp([[[3, 3, 3.0], [4, 4, 4.0]]])
    with pytest.raises(CountMismatch):
        intersect_cps(cp1, other, other, other, tol=1e-3)


def test_reconstruct_regular_tetrahedron():
    rec = reconstruct(refine_to_stable(regular_tetrahedron(), FWL3))
    assert congruent(rec.cloud, regular_tetrahedron()) is not None
    assert rec.certificate["fingerprint_match"]


def test_reconstruct_triangle_from_root_signature():
    tri = PointCloud([[0, 0, 0], [3, 0, 0], [0, 4, 0]])
    rec = reconstruct(refine_to_stable(tri, FWL3))
    assert congruent(rec.cloud, tri) is not None


def test_reconstruct_needs_fwl3():
    from geowl.refinement import WL3

    with pytest.raises(ValueError):
        reconstruct(refine_to_stable(regular_tetrahedron(), WL3))


@settings(max_examples=60)
@given(clouds(4, 9))
def test_round_trip(cloud):
    t = refine_to_stable(cloud, FWL3)
    rec = reconstruct(t)
    assert congruent(rec.cloud, cloud) is not None
    assert rec.certificate["fingerprint_match"]
    if is_generic(cloud):
        assert all(size == 2 * (cloud.n - 4) for size in rec.certificate["cp_sizes"])


@settings(max_examples=15)
@given(clouds(6, 8))
def test_anchor_independence(cloud):
    t = refine_to_stable(cloud, FWL3)
    first = reconstruct(t, anchor=0).cloud
    try:
        second = reconstruct(t, anchor=1).cloud
    except ValueError:
        return
    assert congruent(first, second) is not None


@pytest.mark.parametrize("template", ["square-pyramid", "prism", "mirror-pair", "planar"])
@pytest.mark.parametrize("n", [4, 5, 6, 7, 8])
def test_symmetric_round_trip(template, n):
    cloud = symmetric_cloud(template, n, seed=n)
    rec = reconstruct(refine_to_stable(cloud, FWL3))
    assert congruent(rec.cloud, cloud) is not None
    assert rec.certificate["fingerprint_match"]
    for check in rec.certificate["turnover_checks"]:
        assert check["congruent"]
    if template == "planar":
        assert rec.certificate["planar"]


def test_trick_statistics_on_pyramid():
    stats = trick_statistics(refine_to_stable(symmetric_cloud("square-pyramid", 6), FWL3), all_roots=True)
    assert stats["case_histogram"]["2"] > 0 and stats["case_histogram"]["3"] > 0
    assert stats["turnover_all_congruent"]
