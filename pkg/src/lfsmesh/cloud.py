"""Point-cloud container, spatial index, and the distance fields over it.

Points are float64 arrays of shape (N, 3); a point's id is its row index.
Everything downstream queries the cloud through :class:`SpatialIndex`.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import DegenerateInputError, InputError

log = logging.getLogger(__name__)


@dataclass
class BoundingSphere:
    center: np.ndarray
    radius: float

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius


class PointCloud:
    """Ordered 3D samples with optional unoriented unit normals."""

    def __init__(self, points, normals=None):
        points = np.ascontiguousarray(points, dtype=np.float64)
        if points.ndim != 2 or points.shape[1] != 3 or len(points) == 0:
            raise InputError("point cloud must be a non-empty (N, 3) array")
        if not np.isfinite(points).all():
            raise InputError("point cloud contains non-finite coordinates")
        if normals is not None:
            normals = np.ascontiguousarray(normals, dtype=np.float64)
            if normals.shape != points.shape:
                raise InputError("normals must match the point array shape")
            norms = np.linalg.norm(normals, axis=1)
            if np.any(np.abs(norms - 1.0) > 1e-6):
                raise InputError("normals must have unit length (within 1e-6)")
        self.points = points
        self.normals = normals

    def __len__(self) -> int:
        return len(self.points)

    @property
    def has_normals(self) -> bool:
        return self.normals is not None


class SpatialIndex:
    """k-NN index over a cloud; immutable after build, safe to query freely.

    Results are identical to a brute-force scan, with distance ties broken
    by ascending point id.
    """

    def __init__(self, cloud: PointCloud):
        self.cloud = cloud
        self._tree = backend.KdTree(cloud.points)

    @property
    def kdtree(self):
        return self._tree

    def k_nearest(self, x, k: int):
        """(distances, ids) of the min(k, N) nearest points to x."""
        if k < 1:
            raise InputError("k must be >= 1")
        return self._tree.knn(x, k)

    def k_nearest_batch(self, X, k: int):
        if k < 1:
            raise InputError("k must be >= 1")
        return self._tree.knn_batch(X, min(k, len(self.cloud)))


def build_index(cloud: PointCloud) -> SpatialIndex:
    return SpatialIndex(cloud)


def unsigned_distance(index: SpatialIndex, x) -> float:
    """Distance from x to the nearest cloud point (1-Lipschitz in x)."""
    return index.kdtree.nearest_distance(np.asarray(x, dtype=np.float64))


def robust_distance(index: SpatialIndex, x, k: int) -> float:
    """Root-mean-square distance from x to its k nearest cloud points.

    Equals the unsigned distance at k=1 and grows monotonically with k;
    trades accuracy for resilience to noise and outliers.
    """
    if k < 1:
        raise InputError("k must be >= 1")
    n = len(index.cloud)
    if k > n:
        log.warning("robust_distance: k=%d exceeds cloud size %d, clamping", k, n)
        k = n
    return index.kdtree.robust_distance(np.asarray(x, dtype=np.float64), k)


def epsilon_threshold(index: SpatialIndex, cloud: PointCloud, k: int) -> float:
    """Smallest robust distance over all input points.

    This is the scale below which a query point counts as lying "on" the
    sampled surface; the antipodal ray search uses it as its level.
    """
    if k < 1:
        raise InputError("k must be >= 1")
    k = min(k, len(cloud))
    dist, _ = index.k_nearest_batch(cloud.points, k)
    rms = np.sqrt(np.mean(dist * dist, axis=1))
    return float(rms.min())


def loose_bounding_sphere(cloud: PointCloud) -> BoundingSphere:
    """Centroid-centered sphere with radius twice the max centroid distance.

    The doubled radius upper-bounds the exact point-set diameter in O(N),
    which is all the enclosing domain construction needs.
    """
    pts = cloud.points
    center = pts.mean(axis=0)
    d = pts - center
    rmax = math.sqrt(float((d * d).sum(axis=1).max()))
    if rmax == 0.0:
        raise DegenerateInputError("all points coincide; no bounding sphere")
    return BoundingSphere(center=center, radius=2.0 * rmax)
