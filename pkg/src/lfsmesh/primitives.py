"""Analytic test surfaces: samplers, defect injectors, and ground-truth LFS.

Every sampler is deterministic for a fixed seed. Ground-truth local feature
size is closed-form where the medial axis is known (sphere, capsule, slab,
capsule pairs) and computed by a dense shrinking-ball medial oracle for the
cone and ellipsoid, cached per specification.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cloud import PointCloud
from .errors import InputError

_GT_CACHE: dict = {}


@dataclass(frozen=True)
class PrimitiveSpec:
    """Description of a sampled analytic surface with optional defects."""

    kind: str  # sphere | cone | ellipsoid | capsule | two_capsules | plane | slab
    params: tuple = ()
    count: int = 1000
    sampling: str = "uniform"  # uniform | nonuniform
    noise: float = 0.0  # Gaussian sigma as a fraction of the bbox edge
    outlier_clusters: int = 0
    outliers_per_cluster: int = 5
    uniform_outliers: int = 0
    holes: tuple = ()  # ((cx, cy, cz, radius), ...)
    with_normals: bool = False

    def cache_key(self):
        return (self.kind, self.params)


@dataclass
class SampleResult:
    cloud: PointCloud
    surface_count: int  # leading rows that lie on the surface (pre-noise)
    outlier_mask: np.ndarray = field(default=None)  # True where row is an outlier


# ---------------------------------------------------------------------------
# surface samplers (points exactly on the surface, with outward unit normals)

def _sphere_point(u, radius):
    return radius * u, u


def _sample_sphere(spec, rng, n):
    radius = spec.params[0] if spec.params else 1.0
    pts = np.empty((n, 3))
    nrm = np.empty((n, 3))
    i = 0
    while i < n:
        v = rng.standard_normal(3)
        norm = np.linalg.norm(v)
        if norm < 1e-12:
            continue
        u = v / norm
        if not _keep_density(spec, rng, u[2]):
            continue
        pts[i], nrm[i] = _sphere_point(u, radius)
        i += 1
    return pts, nrm


def _keep_density(spec, rng, coordinate):
    # Non-uniform mode thins samples by a smooth fixed density field
    # (1 + 0.8*cos of a surface coordinate), normalized to max 1.
    if spec.sampling != "nonuniform":
        return True
    density = (1.0 + 0.8 * math.cos(math.pi * coordinate)) / 1.8
    return rng.random() < density


def _sample_cone(spec, rng, n):
    # Solid cone: apex on the axis at height h, circular base of radius r in
    # the z=0 plane (lateral surface + base disk).
    r, h = spec.params if spec.params else (1.0, 2.0)
    slant = math.sqrt(r * r + h * h)
    lateral_area = math.pi * r * slant
    base_area = math.pi * r * r
    p_lateral = lateral_area / (lateral_area + base_area)
    pts = np.empty((n, 3))
    nrm = np.empty((n, 3))
    i = 0
    while i < n:
        phi = 2.0 * math.pi * rng.random()
        if rng.random() < p_lateral:
            # area element grows linearly with distance from the apex
            s = math.sqrt(rng.random())
            z = h * (1.0 - s)
            rad = r * s
            if not _keep_density(spec, rng, math.cos(phi)):
                continue
            pts[i] = (rad * math.cos(phi), rad * math.sin(phi), z)
            axial = r / slant
            radial = h / slant
            nrm[i] = (
                radial * math.cos(phi),
                radial * math.sin(phi),
                axial,
            )
        else:
            rad = r * math.sqrt(rng.random())
            if not _keep_density(spec, rng, math.cos(phi)):
                continue
            pts[i] = (rad * math.cos(phi), rad * math.sin(phi), 0.0)
            nrm[i] = (0.0, 0.0, -1.0)
        i += 1
    return pts, nrm


def _sample_ellipsoid(spec, rng, n):
    a, b, c = spec.params if spec.params else (2.0, 1.0, 1.0)
    axes = np.array([a, b, c])
    # Rejection from the unit sphere weighted by the local area stretch so
    # the surface measure is uniform.
    gmax = max(a * b, b * c, a * c)
    pts = np.empty((n, 3))
    nrm = np.empty((n, 3))
    i = 0
    while i < n:
        v = rng.standard_normal(3)
        norm = np.linalg.norm(v)
        if norm < 1e-12:
            continue
        u = v / norm
        g = math.sqrt(
            (u[0] * b * c) ** 2 + (u[1] * a * c) ** 2 + (u[2] * a * b) ** 2
        )
        if rng.random() * gmax > g:
            continue
        if not _keep_density(spec, rng, u[0]):
            continue
        p = axes * u
        grad = 2.0 * p / (axes * axes)
        pts[i] = p
        nrm[i] = grad / np.linalg.norm(grad)
        i += 1
    return pts, nrm


def _capsule_frames(spec):
    r, half = spec.params if spec.params else (0.5, 1.0)
    return r, half


def _sample_capsule_at(rng, r, half, axis_offset=0.0):
    # Cylinder of half-length `half` along z, hemispherical caps; axis
    # shifted along x by axis_offset.
    cyl_area = 2.0 * math.pi * r * (2.0 * half)
    cap_area = 4.0 * math.pi * r * r
    if rng.random() < cyl_area / (cyl_area + cap_area):
        phi = 2.0 * math.pi * rng.random()
        z = (2.0 * rng.random() - 1.0) * half
        p = np.array([r * math.cos(phi) + axis_offset, r * math.sin(phi), z])
        nv = np.array([math.cos(phi), math.sin(phi), 0.0])
        return p, nv, math.cos(phi)
    while True:
        v = rng.standard_normal(3)
        norm = np.linalg.norm(v)
        if norm >= 1e-12:
            break
    u = v / norm
    center_z = half if u[2] >= 0 else -half
    p = np.array([r * u[0] + axis_offset, r * u[1], r * u[2] + center_z])
    return p, u, u[0]


def _sample_capsule(spec, rng, n):
    r, half = _capsule_frames(spec)
    pts = np.empty((n, 3))
    nrm = np.empty((n, 3))
    i = 0
    while i < n:
        p, nv, coord = _sample_capsule_at(rng, r, half)
        if not _keep_density(spec, rng, coord):
            continue
        pts[i], nrm[i] = p, nv
        i += 1
    return pts, nrm


def _sample_two_capsules(spec, rng, n):
    r, half, gap = spec.params if spec.params else (0.5, 1.0, 0.2)
    offset = r + 0.5 * gap
    pts = np.empty((n, 3))
    nrm = np.empty((n, 3))
    i = 0
    while i < n:
        side = -offset if rng.random() < 0.5 else offset
        p, nv, coord = _sample_capsule_at(rng, r, half, axis_offset=side)
        if not _keep_density(spec, rng, coord):
            continue
        pts[i], nrm[i] = p, nv
        i += 1
    return pts, nrm


def _sample_plane(spec, rng, n):
    extent = spec.params[0] if spec.params else 1.0
    pts = np.empty((n, 3))
    i = 0
    while i < n:
        x = (2.0 * rng.random() - 1.0) * extent
        y = (2.0 * rng.random() - 1.0) * extent
        if not _keep_density(spec, rng, x / extent):
            continue
        pts[i] = (x, y, 0.0)
        i += 1
    nrm = np.tile([0.0, 0.0, 1.0], (n, 1))
    return pts, nrm


def _sample_slab(spec, rng, n):
    extent, thickness = spec.params if spec.params else (1.0, 1.0)
    pts = np.empty((n, 3))
    nrm = np.empty((n, 3))
    for i in range(n):
        x = (2.0 * rng.random() - 1.0) * extent
        y = (2.0 * rng.random() - 1.0) * extent
        if rng.random() < 0.5:
            pts[i] = (x, y, 0.0)
            nrm[i] = (0.0, 0.0, -1.0)
        else:
            pts[i] = (x, y, thickness)
            nrm[i] = (0.0, 0.0, 1.0)
    return pts, nrm


_SAMPLERS = {
    "sphere": _sample_sphere,
    "cone": _sample_cone,
    "ellipsoid": _sample_ellipsoid,
    "capsule": _sample_capsule,
    "two_capsules": _sample_two_capsules,
    "plane": _sample_plane,
    "slab": _sample_slab,
}


def sample(spec: PrimitiveSpec, seed: int) -> SampleResult:
    """Draw a deterministic point cloud for the spec, defects included."""
    if spec.kind not in _SAMPLERS:
        raise InputError(f"unknown primitive kind {spec.kind!r}")
    rng = np.random.default_rng(seed)
    pts, nrm = _SAMPLERS[spec.kind](spec, rng, spec.count)

    if spec.holes:
        keep = np.ones(len(pts), dtype=bool)
        for hx, hy, hz, hr in spec.holes:
            d = pts - np.array([hx, hy, hz])
            keep &= (d * d).sum(axis=1) > hr * hr
        pts, nrm = pts[keep], nrm[keep]

    bbox_edge = float((pts.max(axis=0) - pts.min(axis=0)).max())
    if spec.noise > 0:
        pts = pts + rng.normal(0.0, spec.noise * bbox_edge, pts.shape)

    surface_count = len(pts)
    extras = []
    center = pts.mean(axis=0)
    loose_r = 2.0 * math.sqrt(((pts - center) ** 2).sum(axis=1).max())
    for _ in range(spec.outlier_clusters):
        # cluster center anywhere in the loose bounding sphere
        while True:
            v = rng.uniform(-1.0, 1.0, 3)
            if (v * v).sum() <= 1.0:
                break
        cpos = center + v * loose_r
        extras.append(cpos + rng.normal(0.0, 0.02 * bbox_edge,
                                        (spec.outliers_per_cluster, 3)))
    if spec.uniform_outliers > 0:
        lo = pts.min(axis=0) - 0.1 * bbox_edge
        hi = pts.max(axis=0) + 0.1 * bbox_edge
        extras.append(rng.uniform(lo, hi, (spec.uniform_outliers, 3)))
    if extras:
        pts = np.vstack([pts] + extras)

    outlier_mask = np.zeros(len(pts), dtype=bool)
    outlier_mask[surface_count:] = True
    normals = None
    if spec.with_normals and surface_count == len(pts) and spec.noise == 0.0:
        normals = nrm[: len(pts)]
    cloud = PointCloud(pts, normals)
    return SampleResult(cloud=cloud, surface_count=surface_count,
                        outlier_mask=outlier_mask)


# ---------------------------------------------------------------------------
# ground-truth local feature size

def _medial_oracle_cloud(spec: PrimitiveSpec, n=200_000):
    """Dense noise-free surface sample with normals, for the medial oracle."""
    dense = PrimitiveSpec(kind=spec.kind, params=spec.params, count=n)
    rng = np.random.default_rng(987654321)
    pts, nrm = _SAMPLERS[spec.kind](dense, rng, n)
    return pts, nrm


def _shrinking_ball_radius(tree, pts, p, n_dir, r0):
    """Radius of the maximal empty ball tangent at p on the side of n_dir.

    Classic shrinking-ball iteration: start large, shrink to the ball through
    the nearest offending sample until it stabilizes.
    """
    r = r0
    for _ in range(60):
        c = p + n_dir * r
        d, i = tree.query(c, k=2)
        # skip p itself (distance ~0 at index of p)
        q = pts[i[1]] if d[0] < 1e-9 else pts[i[0]]
        dq = float(np.linalg.norm(c - q))
        if dq >= r - 1e-9:
            return r
        pq = q - p
        denom = 2.0 * float(np.dot(pq, n_dir))
        if denom <= 1e-12:
            return r
        r_new = float(np.dot(pq, pq)) / denom
        if r_new <= 1e-9 or abs(r_new - r) < 1e-9:
            return max(r_new, 1e-9)
        r = r_new
    return r


def _oracle_lfs(spec: PrimitiveSpec, queries):
    from scipy.spatial import cKDTree

    key = spec.cache_key()
    if key not in _GT_CACHE:
        pts, nrm = _medial_oracle_cloud(spec)
        _GT_CACHE[key] = (cKDTree(pts), pts, nrm)
    tree, pts, nrm = _GT_CACHE[key]
    r0 = float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))
    out = np.empty(len(queries))
    for j, q in enumerate(np.asarray(queries, dtype=np.float64)):
        _, i = tree.query(q, k=1)
        p = pts[i]
        n_dir = nrm[i]
        inner = _shrinking_ball_radius(tree, pts, p, -n_dir, r0)
        outer = _shrinking_ball_radius(tree, pts, p, n_dir, r0)
        out[j] = min(inner, outer)
    return out


def ground_truth_lfs(spec: PrimitiveSpec, queries) -> np.ndarray:
    """Exact (or densely estimated) LFS at surface points of the primitive."""
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    if spec.kind == "sphere":
        radius = spec.params[0] if spec.params else 1.0
        return np.full(len(queries), float(radius))
    if spec.kind == "capsule":
        r, _ = _capsule_frames(spec)
        return np.full(len(queries), float(r))
    if spec.kind == "slab":
        _, thickness = spec.params if spec.params else (1.0, 1.0)
        return np.full(len(queries), thickness / 2.0)
    if spec.kind == "two_capsules":
        r, half, gap = spec.params if spec.params else (0.5, 1.0, 0.2)
        # medial structure: each capsule's own axis (distance r) plus the
        # mid-plane between facing sides (x = 0)
        return np.minimum(r, np.abs(queries[:, 0]))
    if spec.kind in ("cone", "ellipsoid"):
        return _oracle_lfs(spec, queries)
    raise InputError(f"ground-truth LFS unavailable for {spec.kind!r}")
