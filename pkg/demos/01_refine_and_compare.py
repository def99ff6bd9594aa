"""Refine a cloud under all four variants and compare it with a moved copy."""
import numpy as np

from geowl import ALL_VARIANTS, congruent, refine_to_stable
from geowl.generate import FamilySpec, random_cloud, random_exact_transform

cloud = random_cloud(FamilySpec("random", 7, seed=3))
moved = random_exact_transform(cloud, np.random.default_rng(0), translate=True)

for v in ALL_VARIANTS:
    ta, tb = refine_to_stable(cloud, v), refine_to_stable(moved, v)
    print(f"{v.name:5s} rounds={ta.rounds} colours={ta.num_colors(ta.rounds):4d} "
          f"digest={ta.fingerprint.digest[:12]} equal={ta.fingerprint == tb.fingerprint}")

print("oracle:", "congruent" if congruent(cloud, moved) else "non-congruent")
