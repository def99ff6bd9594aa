"""Rebuild a cloud from its 3-FWL colour tables alone."""
from geowl import congruent, refine_to_stable, FWL3
from geowl.generate import FamilySpec, random_cloud, symmetric_cloud
from geowl.reconstruct import reconstruct

for cloud in [random_cloud(FamilySpec("random", 8, seed=11)), symmetric_cloud("square-pyramid", 7)]:
    t = refine_to_stable(cloud, FWL3)
    rec = reconstruct(t)
    cert = rec.certificate
    print(cloud.comment)
    print("  anchor", cert["anchor"], "cp sizes", cert["cp_sizes"], "cases", cert["case_histogram"])
    print("  fingerprint match", cert["fingerprint_match"], "congruent", congruent(cloud, rec.cloud) is not None)
