"""Local polynomial (Monge-form) fitting on point neighborhoods.

Fits a bivariate height polynomial over a PCA-aligned local frame and reads
principal curvatures and the surface normal off the first- and second-order
coefficients. Normals are unoriented: n and -n are equally valid.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .cloud import PointCloud, SpatialIndex
from .errors import DegenerateFitError, InputError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class JetParams:
    degree: int = 2
    k_neighbors: int = 18

    def __post_init__(self):
        if self.degree < 2:
            raise InputError("jet degree must be >= 2")
        needed = (self.degree + 1) * (self.degree + 2) // 2
        if self.k_neighbors < needed:
            raise InputError(
                f"k_neighbors={self.k_neighbors} too small for degree "
                f"{self.degree} (need >= {needed})"
            )


@dataclass
class MongeForm:
    origin: np.ndarray
    d1: np.ndarray  # direction of the largest |principal curvature|
    d2: np.ndarray
    normal: np.ndarray
    k1: float  # |k1| >= |k2|
    k2: float


def _monomial_powers(degree):
    return [(i, j) for total in range(degree + 1)
            for i in range(total, -1, -1)
            for j in (total - i,)]


def _design_matrix(u, v, degree):
    powers = _monomial_powers(degree)
    cols = [np.power(u, i) * np.power(v, j) for i, j in powers]
    return np.column_stack(cols), powers


def fit_monge(index: SpatialIndex, x, params: JetParams) -> MongeForm:
    """Fit a Monge form at x from its k-nearest neighborhood.

    Raises :class:`DegenerateFitError` on rank-deficient neighborhoods
    (coincident or collinear samples).
    """
    x = np.asarray(x, dtype=np.float64)
    k = min(params.k_neighbors, len(index.cloud))
    needed = (params.degree + 1) * (params.degree + 2) // 2
    if k < needed:
        raise DegenerateFitError(f"only {k} samples for a {needed}-term fit")
    _, ids = index.k_nearest(x, k)
    nbrs = index.cloud.points[ids]

    centered = nbrs - nbrs.mean(axis=0)
    cov = centered.T @ centered
    evals, evecs = np.linalg.eigh(cov)
    if evals[1] <= 1e-20 * max(evals[2], 1e-300) or evals[2] <= 0.0:
        raise DegenerateFitError("neighborhood is collinear or coincident")
    # local frame: two tangent-ish axes and the least-variance axis as height
    e1, e2, en = evecs[:, 2], evecs[:, 1], evecs[:, 0]

    local = (nbrs - x) @ np.column_stack([e1, e2, en])
    A, powers = _design_matrix(local[:, 0], local[:, 1], params.degree)
    # normal equations on the PCA-aligned, x-translated frame
    ata = A.T @ A
    atb = A.T @ local[:, 2]
    try:
        coef = np.linalg.solve(ata, atb)
    except np.linalg.LinAlgError:
        raise DegenerateFitError("singular normal equations") from None

    idx = {pw: i for i, pw in enumerate(powers)}
    hu = coef[idx[(1, 0)]]
    hv = coef[idx[(0, 1)]]
    huu = 2.0 * coef[idx[(2, 0)]]
    huv = coef[idx[(1, 1)]]
    hvv = 2.0 * coef[idx[(0, 2)]]

    # principal curvatures of the height graph at the origin
    g = 1.0 + hu * hu + hv * hv
    sg = math.sqrt(g)
    E = 1.0 + hu * hu
    F = hu * hv
    G = 1.0 + hv * hv
    L = huu / sg
    M = huv / sg
    N = hvv / sg
    inv_det = 1.0 / (E * G - F * F)
    shape = inv_det * np.array([
        [L * G - M * F, M * G - N * F],
        [M * E - L * F, N * E - M * F],
    ])
    k_vals, k_vecs = np.linalg.eig(shape)
    k_vals = np.real(k_vals)
    k_vecs = np.real(k_vecs)
    order = np.argsort(-np.abs(k_vals))
    k1, k2 = float(k_vals[order[0]]), float(k_vals[order[1]])

    frame = np.column_stack([e1, e2, en])
    n_local = np.array([-hu, -hv, 1.0]) / sg
    normal = frame @ n_local
    xu = np.array([1.0, 0.0, hu])
    xv = np.array([0.0, 1.0, hv])
    t1 = k_vecs[0, order[0]] * xu + k_vecs[1, order[0]] * xv
    d1 = frame @ t1
    # orthonormalize the output frame exactly
    normal /= np.linalg.norm(normal)
    d1 -= normal * float(d1 @ normal)
    norm_d1 = np.linalg.norm(d1)
    if norm_d1 < 1e-12:
        d1 = frame @ xu - normal * float((frame @ xu) @ normal)
        norm_d1 = np.linalg.norm(d1)
    d1 /= norm_d1
    d2 = np.cross(normal, d1)

    return MongeForm(origin=x, d1=d1, d2=d2, normal=normal, k1=k1, k2=k2)


def curvature_radius(m: MongeForm, clamp_max: float) -> float:
    """1 / |k1| clamped to clamp_max; flat fits return clamp_max."""
    if clamp_max <= 0:
        raise InputError("clamp_max must be positive")
    k = abs(m.k1)
    if k == 0.0:
        return clamp_max
    return min(1.0 / k, clamp_max)


def _pca_plane_normal(nbrs):
    centered = nbrs - nbrs.mean(axis=0)
    _, evecs = np.linalg.eigh(centered.T @ centered)
    return evecs[:, 0]


def estimate_normals(index: SpatialIndex, cloud: PointCloud,
                     params: JetParams) -> np.ndarray:
    """Per-point unoriented unit normals via jet fitting.

    Points with rank-deficient neighborhoods fall back to the best-fit-plane
    normal; orientation consistency is neither attempted nor required.
    """
    out = np.empty_like(cloud.points)
    k = min(params.k_neighbors, len(cloud))
    for i, p in enumerate(cloud.points):
        try:
            out[i] = fit_monge(index, p, params).normal
        except DegenerateFitError:
            _, ids = index.k_nearest(p, k)
            n = _pca_plane_normal(index.cloud.points[ids])
            norm = np.linalg.norm(n)
            if norm < 1e-12:
                # collinear neighborhood: any perpendicular direction works
                n = np.array([0.0, 0.0, 1.0])
                norm = 1.0
            out[i] = n / norm
            log.debug("degenerate jet at point %d; used plane normal", i)
    return out
