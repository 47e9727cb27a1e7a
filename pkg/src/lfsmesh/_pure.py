"""Pure numpy/scipy implementations of the hot kernels.

This module mirrors the API of the compiled ``_kernels`` extension and is
selected at import time when the extension is unavailable (see
``backend.py``). Both backends must produce bit-identical results: the
floating-point expressions here are written in the same evaluation order as
their compiled twins.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.spatial import cKDTree

from . import lipsearch

COMPILED = False

# Static filter constants for the floating-point predicate evaluations
# (conservative multiples of the Shewchuk bounds).
_O3D_BOUND = 1e-13
_ISP_BOUND = 1e-12


class KdTree:
    """k-nearest-neighbor index over a fixed (N, 3) float64 point array.

    Ties in distance are broken by ascending point id, which keeps results
    identical to a brute-force scan and to the compiled backend.
    """

    def __init__(self, points):
        self.points = np.ascontiguousarray(points, dtype=np.float64)
        if self.points.ndim != 2 or self.points.shape[1] != 3:
            raise ValueError("points must have shape (N, 3)")
        self.n = self.points.shape[0]
        self._tree = cKDTree(self.points, copy_data=False)

    def _exact_dists(self, idx, q):
        d = self.points[idx] - q
        return np.sqrt(d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1] + d[:, 2] * d[:, 2])

    def nearest_distance(self, q) -> float:
        d, i = self._tree.query(q, k=1)
        return float(self._exact_dists(np.asarray([i]), np.asarray(q))[0])

    def knn(self, q, k: int):
        """Distances and ids of the k nearest points, (distance, id) sorted."""
        q = np.asarray(q, dtype=np.float64)
        k = min(int(k), self.n)
        _, idx = self._tree.query(q, k=k)
        idx = np.atleast_1d(idx)
        dist = self._exact_dists(idx, q)
        if k < self.n:
            # A tie spanning the k-th rank must be re-ranked by id over every
            # point at that distance.
            ball = self._tree.query_ball_point(q, float(dist.max()) * (1 + 1e-12))
            if len(ball) > k:
                idx = np.asarray(ball, dtype=np.int64)
                dist = self._exact_dists(idx, q)
        order = np.lexsort((idx, dist))[:k]
        return dist[order], idx[order].astype(np.int64)

    def knn_batch(self, Q, k: int):
        """Batched k-NN; per-row ties sorted by id within equal distances."""
        Q = np.ascontiguousarray(Q, dtype=np.float64)
        k = min(int(k), self.n)
        _, idx = self._tree.query(Q, k=k, workers=1)
        idx = idx.reshape(len(Q), k)
        diff = self.points[idx] - Q[:, None, :]
        dist = np.sqrt(
            diff[:, :, 0] * diff[:, :, 0]
            + diff[:, :, 1] * diff[:, :, 1]
            + diff[:, :, 2] * diff[:, :, 2]
        )
        for row in range(len(Q)):
            order = np.lexsort((idx[row], dist[row]))
            idx[row] = idx[row][order]
            dist[row] = dist[row][order]
        return dist, idx.astype(np.int64)

    def robust_distance(self, q, k: int) -> float:
        """Root-mean-square distance to the k nearest points."""
        dist, _ = self.knn(q, k)
        acc = 0.0
        for d in dist:
            acc += d * d
        return math.sqrt(acc / len(dist))


def ray_first_hit(tree: KdTree, origin, direction, t0: float, t1: float,
                  eps: float, max_depth: int = lipsearch.DEFAULT_MAX_DEPTH):
    """First eps-sublevel dip of the point-set distance along a ray.

    Walks the start parameter forward until the distance clears eps (skipping
    the sheet the ray origin sits on), then runs the dichotomic search.
    Returns the hit parameter or a negative value when there is no hit.
    """
    ox, oy, oz = float(origin[0]), float(origin[1]), float(origin[2])
    dx, dy, dz = float(direction[0]), float(direction[1]), float(direction[2])

    def f(t: float) -> float:
        return tree.nearest_distance((ox + t * dx, oy + t * dy, oz + t * dz))

    t = t0
    ft = f(t)
    while ft <= eps:
        t = t + (eps - ft) + 0.5 * eps
        if t >= t1:
            return -1.0
        ft = f(t)
    try:
        hit = lipsearch.first_sublevel_point(f, t, t1, eps, max_depth=max_depth)
    except lipsearch.SearchFailureError:
        return -1.0
    return -1.0 if hit is None else hit


class EnvelopeField:
    """Gaussian-weighted unoriented plane-distance field over a point cloud.

    Value at x is the weighted mean of |(x - p) . n_p| over the k nearest
    points p, with Gaussian weights exp(-|x - p|^2 / h^2). Orientation of the
    normals does not matter.
    """

    def __init__(self, tree: KdTree, normals, k: int, h: float):
        self.tree = tree
        self.normals = np.ascontiguousarray(normals, dtype=np.float64)
        self.k = int(k)
        self.h = float(h)

    def value(self, q) -> float:
        qx, qy, qz = float(q[0]), float(q[1]), float(q[2])
        dist, idx = self.tree.knn((qx, qy, qz), self.k)
        inv_h2 = 1.0 / (self.h * self.h)
        num = 0.0
        den = 0.0
        pts = self.tree.points
        nrm = self.normals
        for j in range(len(idx)):
            i = idx[j]
            vx = qx - pts[i, 0]
            vy = qy - pts[i, 1]
            vz = qz - pts[i, 2]
            w = math.exp(-(dist[j] * dist[j]) * inv_h2)
            dot = vx * nrm[i, 0] + vy * nrm[i, 1] + vz * nrm[i, 2]
            num += abs(dot) * w
            den += w
        if den == 0.0:
            # All weights underflowed: fall back to the dominant (nearest)
            # term, whose weight cancels in the ratio.
            i = idx[0]
            vx = qx - pts[i, 0]
            vy = qy - pts[i, 1]
            vz = qz - pts[i, 2]
            return abs(vx * nrm[i, 0] + vy * nrm[i, 1] + vz * nrm[i, 2])
        return num / den

    def values(self, Q):
        return np.array([self.value(q) for q in np.asarray(Q, dtype=np.float64)])

    def segment_reaches_sublevel(self, p0, p1, eps: float,
                                 max_depth: int = lipsearch.DEFAULT_MAX_DEPTH) -> bool:
        """Sublevel-reachability of the envelope value along a segment.

        The field is only approximately 1-Lipschitz, so the search runs with
        the strict contract check disabled.
        """
        p0 = np.asarray(p0, dtype=np.float64)
        p1 = np.asarray(p1, dtype=np.float64)
        dx, dy, dz = p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2]
        length = math.sqrt(dx * dx + dy * dy + dz * dz)
        if length == 0.0:
            return self.value(p0) <= eps
        ux, uy, uz = dx / length, dy / length, dz / length

        def f(t: float) -> float:
            return self.value((p0[0] + t * ux, p0[1] + t * uy, p0[2] + t * uz))

        try:
            return lipsearch.segment_crosses_sublevel(
                f, 0.0, length, eps, max_depth=max_depth, strict=False
            )
        except lipsearch.SearchFailureError:
            return False


def tet_shape(ax, ay, az, bx, by, bz, cx, cy, cz, dx, dy, dz):
    """Circumcenter, circumradius, and shortest edge of a tetrahedron.

    Returns (ok, cx, cy, cz, radius, min_edge); ok is 0 for degenerate
    (near-flat) cells, whose circumsphere is meaningless.
    """
    bax = bx - ax
    bay = by - ay
    baz = bz - az
    cax = cx - ax
    cay = cy - ay
    caz = cz - az
    dax = dx - ax
    day = dy - ay
    daz = dz - az
    det = (
        bax * (cay * daz - caz * day)
        - bay * (cax * daz - caz * dax)
        + baz * (cax * day - cay * dax)
    )
    rb = 0.5 * (bax * bax + bay * bay + baz * baz)
    rc = 0.5 * (cax * cax + cay * cay + caz * caz)
    rd = 0.5 * (dax * dax + day * day + daz * daz)
    if det == 0.0:
        return 0, 0.0, 0.0, 0.0, 0.0, 0.0
    inv = 1.0 / det
    ox = (
        rb * (cay * daz - caz * day)
        - rc * (bay * daz - baz * day)
        + rd * (bay * caz - baz * cay)
    ) * inv
    oy = -(
        rb * (cax * daz - caz * dax)
        - rc * (bax * daz - baz * dax)
        + rd * (bax * caz - baz * cax)
    ) * inv
    oz = (
        rb * (cax * day - cay * dax)
        - rc * (bax * day - bay * dax)
        + rd * (bax * cay - bay * cax)
    ) * inv
    radius = math.sqrt(ox * ox + oy * oy + oz * oz)
    e2 = bax * bax + bay * bay + baz * baz
    emin2 = e2
    e2 = cax * cax + cay * cay + caz * caz
    if e2 < emin2:
        emin2 = e2
    e2 = dax * dax + day * day + daz * daz
    if e2 < emin2:
        emin2 = e2
    e2 = (cx - bx) ** 2 + (cy - by) ** 2 + (cz - bz) ** 2
    if e2 < emin2:
        emin2 = e2
    e2 = (dx - bx) ** 2 + (dy - by) ** 2 + (dz - bz) ** 2
    if e2 < emin2:
        emin2 = e2
    e2 = (dx - cx) ** 2 + (dy - cy) ** 2 + (dz - cz) ** 2
    if e2 < emin2:
        emin2 = e2
    return 1, ax + ox, ay + oy, az + oz, radius, math.sqrt(emin2)


def orient3d_filtered(ax, ay, az, bx, by, bz, cx, cy, cz, dx, dy, dz):
    """Float evaluation of det[b-a; c-a; d-a] with an error bound.

    Returns (det, bound): the sign of det is certain iff |det| > bound.
    Positive det means (a, b, c, d) is right-handed, matching
    ``exactmath.orient3d_sign``.
    """
    bax = bx - ax
    bay = by - ay
    baz = bz - az
    cax = cx - ax
    cay = cy - ay
    caz = cz - az
    dax = dx - ax
    day = dy - ay
    daz = dz - az
    caydaz = cay * daz
    cazday = caz * day
    cazdax = caz * dax
    caxdaz = cax * daz
    caxday = cax * day
    caydax = cay * dax
    det = (
        bax * (caydaz - cazday)
        + bay * (cazdax - caxdaz)
        + baz * (caxday - caydax)
    )
    permanent = (
        (abs(caydaz) + abs(cazday)) * abs(bax)
        + (abs(cazdax) + abs(caxdaz)) * abs(bay)
        + (abs(caxday) + abs(caydax)) * abs(baz)
    )
    return det, _O3D_BOUND * permanent


def insphere_filtered(ax, ay, az, bx, by, bz, cx, cy, cz,
                      dx, dy, dz, ex, ey, ez):
    """Float evaluation of the lifted in-sphere determinant with a bound.

    Sign convention matches ``exactmath.insphere_sign``: for a positively
    oriented (a, b, c, d) a negative determinant means e is inside.
    """
    aex = ax - ex
    aey = ay - ey
    aez = az - ez
    bex = bx - ex
    bey = by - ey
    bez = bz - ez
    cex = cx - ex
    cey = cy - ey
    cez = cz - ez
    dex = dx - ex
    dey = dy - ey
    dez = dz - ez

    alift = aex * aex + aey * aey + aez * aez
    blift = bex * bex + bey * bey + bez * bez
    clift = cex * cex + cey * cey + cez * cez
    dlift = dex * dex + dey * dey + dez * dez

    ab = aex * bey - bex * aey
    bc = bex * cey - cex * bey
    cd = cex * dey - dex * cey
    da = dex * aey - aex * dey
    ac = aex * cey - cex * aey
    bd = bex * dey - dex * bey

    abc = aez * bc - bez * ac + cez * ab
    bcd = bez * cd - cez * bd + dez * bc
    cda = cez * da + dez * ac + aez * cd
    dab = dez * ab + aez * bd + bez * da

    det = dlift * abc - clift * dab + blift * cda - alift * bcd

    aezplus = abs(aez)
    bezplus = abs(bez)
    cezplus = abs(cez)
    dezplus = abs(dez)
    abplus = abs(ab)
    bcplus = abs(bc)
    cdplus = abs(cd)
    daplus = abs(da)
    acplus = abs(ac)
    bdplus = abs(bd)
    permanent = (
        (cdplus * bezplus + bdplus * cezplus + bcplus * dezplus) * alift
        + (cdplus * aezplus + acplus * dezplus + daplus * cezplus) * blift
        + (bdplus * aezplus + abplus * dezplus + daplus * bezplus) * clift
        + (bcplus * aezplus + abplus * cezplus + acplus * bezplus) * dlift
    )
    return det, _ISP_BOUND * permanent
