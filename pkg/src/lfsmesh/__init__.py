"""LFS-adaptive isotropic surface meshing from unoriented 3D point clouds.

The pipeline estimates the local feature size directly on the input samples
(jet-fitted curvature radius combined with a dual-cone shape diameter),
discretizes a reach-aware multi-domain with Delaunay refinement, solves a
constrained least-squares signing problem for an implicit function, and
extracts an isotropic, sizing-driven triangle mesh from its zero level set.
"""

from .backend import COMPILED, backend_name
from .cloud import (
    BoundingSphere,
    PointCloud,
    SpatialIndex,
    build_index,
    epsilon_threshold,
    loose_bounding_sphere,
    robust_distance,
    unsigned_distance,
)

__version__ = "0.1.0"

__all__ = [
    "BoundingSphere",
    "COMPILED",
    "PointCloud",
    "SpatialIndex",
    "backend_name",
    "build_index",
    "epsilon_threshold",
    "loose_bounding_sphere",
    "robust_distance",
    "unsigned_distance",
    "__version__",
]
