"""Local feature size field: assembly, smoothing, and the reach.

Per point, LFS is the minimum of the jet-fitted curvature radius and half
the dual-cone shape diameter. The raw field is denoised with a median
filter followed by Laplacian smoothing; the reach is the minimum of the
smoothed field.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import diameter as _diameter
from . import jets as _jets
from .cloud import PointCloud, SpatialIndex, epsilon_threshold, loose_bounding_sphere
from .errors import DegenerateFitError, InputError

log = logging.getLogger(__name__)

PROVENANCE_CURVATURE = 0
PROVENANCE_DIAMETER = 1
PROVENANCE_FALLBACK = 2
_PROVENANCE_NAMES = {0: "curvature", 1: "diameter", 2: "fallback"}


@dataclass
class ScalarField:
    """One positive value per input point, with the branch that produced it."""

    values: np.ndarray
    provenance: np.ndarray  # int8 codes, see PROVENANCE_*

    def provenance_names(self):
        return [_PROVENANCE_NAMES[int(p)] for p in self.provenance]


@dataclass
class Reach:
    value: float


def estimate_lfs(cloud: PointCloud, index: SpatialIndex,
                 jet_params: _jets.JetParams,
                 cone_params: _diameter.ConeSearchParams,
                 k_robust: int = 12,
                 normals: Optional[np.ndarray] = None,
                 eps: Optional[float] = None) -> ScalarField:
    """Raw per-point LFS = min(curvature radius, half shape diameter).

    Uses the cloud's own normals when present, otherwise jet-estimated ones.
    Points whose jet fit degenerates fall back to the diameter branch alone.
    """
    sphere = loose_bounding_sphere(cloud)
    clamp = sphere.diameter
    if eps is None:
        eps = epsilon_threshold(index, cloud, k_robust)
    if normals is None:
        normals = cloud.normals
    if normals is None:
        normals = _jets.estimate_normals(index, cloud, jet_params)

    n = len(cloud)
    values = np.empty(n)
    provenance = np.empty(n, dtype=np.int8)
    for i in range(n):
        p = cloud.points[i]
        try:
            monge = _jets.fit_monge(index, p, jet_params)
            radius = _jets.curvature_radius(monge, clamp)
        except DegenerateFitError:
            radius = None
        sd = _diameter.shape_diameter(
            index, p, normals[i], cone_params, eps, sphere.diameter, point_id=i
        )
        half = 0.5 * sd.value
        if radius is None:
            values[i] = half
            provenance[i] = PROVENANCE_FALLBACK
        elif radius <= half:
            values[i] = radius
            provenance[i] = PROVENANCE_CURVATURE
        else:
            values[i] = half
            provenance[i] = PROVENANCE_DIAMETER
    return ScalarField(values=values, provenance=provenance)


def median_filter(field: ScalarField, index: SpatialIndex, k: int) -> ScalarField:
    """Replace each value by the median over its k-NN (self included)."""
    if k < 3:
        raise InputError("median filter needs k >= 3")
    _, ids = index.k_nearest_batch(index.cloud.points, k)
    new_values = np.median(field.values[ids], axis=1)
    return ScalarField(values=new_values, provenance=field.provenance.copy())


def laplacian_smooth(field: ScalarField, index: SpatialIndex, k: int,
                     iterations: int, weight: float) -> ScalarField:
    """Damped averaging over k nearest neighbors (excluding the point).

    Each iteration is a convex combination, so the field range never
    expands and a constant field is a fixed point.
    """
    if not (0.0 < weight <= 1.0):
        raise InputError("weight must be in (0, 1]")
    _, ids = index.k_nearest_batch(index.cloud.points, k + 1)
    nbrs = ids[:, 1:]  # drop self (nearest, tie-broken by id)
    values = field.values.copy()
    for _ in range(iterations):
        values = (1.0 - weight) * values + weight * values[nbrs].mean(axis=1)
    return ScalarField(values=values, provenance=field.provenance.copy())


def smooth_lfs(field: ScalarField, index: SpatialIndex, *, median_k: int = 9,
               laplacian_k: int = 9, iterations: int = 3,
               weight: float = 0.5) -> ScalarField:
    """Median pass first, then Laplacian smoothing (fixed order)."""
    return laplacian_smooth(
        median_filter(field, index, median_k), index, laplacian_k,
        iterations, weight,
    )


def reach(field: ScalarField) -> Reach:
    """Minimum of the (smoothed) LFS field."""
    return Reach(value=float(field.values.min()))


def write_field_csv(path, field: ScalarField) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "lfs", "provenance"])
        names = field.provenance_names()
        for i, (v, name) in enumerate(zip(field.values, names)):
            writer.writerow([i, repr(float(v)), name])
