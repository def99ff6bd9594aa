"""Regroup 3-WL neighbour multisets around one root and look for new tetrahedra."""
from geowl import WL3, distance_matrix, refine_to_stable
from geowl.generate import FamilySpec, random_cloud, symmetric_cloud
from geowl.grouping import analyse_rows, build_rows, rows_from_ticks

for cloud in [random_cloud(FamilySpec("random", 7, seed=5)), symmetric_cloud("square-pyramid", 7)]:
    t = refine_to_stable(cloud, WL3)
    root = (0, 1, 2)
    rows = build_rows(t, root)
    _, real = rows_from_ticks(distance_matrix(cloud), root)
    summary = analyse_rows(rows, real).to_dict()
    print(cloud.comment, {k: summary[k] for k in ("feasible_count", "distinct_apex_multisets", "real_grouping_found")})
    print("  findings:", len(summary["new_tetrahedron_findings"]))
