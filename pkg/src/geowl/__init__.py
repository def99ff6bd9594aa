"""Geometric Weisfeiler-Lehman refinement on 3D point clouds.

Refinement (2/3, WL/FWL), inverse reconstruction from 3-FWL transcripts,
exchange-trick counterexample search and 3-WL edge-equality analysis.
"""
from .errors import GeoWLError
from .geometry import (
    DEFAULT_TOL,
    DistanceMatrix,
    PointCloud,
    Tolerance,
    aligned_residual,
    congruent,
    distance_matrix,
    trilaterate,
)
from .refinement import ALL_VARIANTS, FWL2, FWL3, WL2, WL3, Fingerprint, RefinementTranscript, Variant, refine_to_stable

__all__ = [
    "ALL_VARIANTS",
    "DEFAULT_TOL",
    "DistanceMatrix",
    "FWL2",
    "FWL3",
    "Fingerprint",
    "GeoWLError",
    "PointCloud",
    "RefinementTranscript",
    "Tolerance",
    "Variant",
    "WL2",
    "WL3",
    "aligned_residual",
    "congruent",
    "distance_matrix",
    "refine_to_stable",
    "trilaterate",
]
