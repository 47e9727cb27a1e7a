# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: initializedcheck=False, language_level=3
"""Compiled hot kernels: kd-tree queries, Lipschitz ray search, envelope
field evaluation, and floating-point predicate filters.

Mirrors the API and the exact floating-point evaluation order of ``_pure``;
the two backends must stay bit-identical.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, sqrt

COMPILED = True

DEF LEAF_SIZE = 12
DEF MAX_K = 256
DEF STACK_CAP = 160

# mirrors lipsearch.F_TOL / LONG_SEGMENT / DEFAULT_MAX_DEPTH
cdef double F_TOL = 1e-7
cdef double LONG_SEGMENT = 1e3
cdef int DEFAULT_MAX_DEPTH = 64

cdef double _O3D_BOUND = 1e-13
cdef double _ISP_BOUND = 1e-12


cdef class KdTree:
    """Flat-array kd-tree over (N, 3) float64 points.

    Median split on the widest dimension, leaf buckets, exact (distance, id)
    lexicographic ordering of k-NN results.
    """

    cdef double[:, ::1] pts
    cdef public object points
    cdef public int n
    cdef int[::1] node_dim
    cdef int[::1] node_left
    cdef int[::1] node_right
    cdef int[::1] node_lo
    cdef int[::1] node_hi
    cdef double[::1] node_val
    cdef long long[::1] perm

    def __init__(self, points):
        pts = np.ascontiguousarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError("points must have shape (N, 3)")
        self.points = pts
        self.pts = pts
        self.n = pts.shape[0]
        perm = np.arange(self.n, dtype=np.int64)
        dims, lefts, rights, los, his, vals = [], [], [], [], [], []

        def build(lo, hi):
            node = len(dims)
            dims.append(-1)
            lefts.append(-1)
            rights.append(-1)
            los.append(lo)
            his.append(hi)
            vals.append(0.0)
            if hi - lo <= LEAF_SIZE:
                return node
            sub = pts[perm[lo:hi]]
            dim = int(np.argmax(sub.max(axis=0) - sub.min(axis=0)))
            order = np.argsort(sub[:, dim], kind="stable")
            perm[lo:hi] = perm[lo:hi][order]
            mid = (lo + hi) // 2
            dims[node] = dim
            vals[node] = float(pts[perm[mid], dim])
            lefts[node] = build(lo, mid)
            rights[node] = build(mid, hi)
            return node

        import sys
        old = sys.getrecursionlimit()
        sys.setrecursionlimit(max(old, 10000))
        try:
            build(0, self.n)
        finally:
            sys.setrecursionlimit(old)
        self.node_dim = np.asarray(dims, dtype=np.int32)
        self.node_left = np.asarray(lefts, dtype=np.int32)
        self.node_right = np.asarray(rights, dtype=np.int32)
        self.node_lo = np.asarray(los, dtype=np.int32)
        self.node_hi = np.asarray(his, dtype=np.int32)
        self.node_val = np.asarray(vals, dtype=np.float64)
        self.perm = perm

    cdef int _knn_core(self, double qx, double qy, double qz, int k,
                       double* bd2, long long* bid) nogil:
        cdef int stack[STACK_CAP]
        cdef double sd2[STACK_CAP]
        cdef int sp = 0
        cdef int count = 0
        cdef int node, dim, i
        cdef long long pid
        cdef double dx, dy, dz, d2, dax, worst
        cdef int pos
        stack[0] = 0
        sd2[0] = 0.0
        sp = 1
        while sp > 0:
            sp -= 1
            node = stack[sp]
            d2 = sd2[sp]
            if count == k and d2 > bd2[k - 1]:
                continue
            if self.node_dim[node] < 0:
                for i in range(self.node_lo[node], self.node_hi[node]):
                    pid = self.perm[i]
                    dx = qx - self.pts[pid, 0]
                    dy = qy - self.pts[pid, 1]
                    dz = qz - self.pts[pid, 2]
                    d2 = dx * dx + dy * dy + dz * dz
                    if count < k:
                        pos = count
                        while pos > 0 and (bd2[pos - 1] > d2 or
                                           (bd2[pos - 1] == d2 and bid[pos - 1] > pid)):
                            bd2[pos] = bd2[pos - 1]
                            bid[pos] = bid[pos - 1]
                            pos -= 1
                        bd2[pos] = d2
                        bid[pos] = pid
                        count += 1
                    elif d2 < bd2[k - 1] or (d2 == bd2[k - 1] and pid < bid[k - 1]):
                        pos = k - 1
                        while pos > 0 and (bd2[pos - 1] > d2 or
                                           (bd2[pos - 1] == d2 and bid[pos - 1] > pid)):
                            bd2[pos] = bd2[pos - 1]
                            bid[pos] = bid[pos - 1]
                            pos -= 1
                        bd2[pos] = d2
                        bid[pos] = pid
            else:
                dim = self.node_dim[node]
                if dim == 0:
                    dax = qx - self.node_val[node]
                elif dim == 1:
                    dax = qy - self.node_val[node]
                else:
                    dax = qz - self.node_val[node]
                worst = dax * dax
                if dax < 0:
                    # near = left, far = right
                    if count < k or worst <= bd2[k - 1]:
                        stack[sp] = self.node_right[node]
                        sd2[sp] = worst
                        sp += 1
                    stack[sp] = self.node_left[node]
                    sd2[sp] = 0.0
                    sp += 1
                else:
                    if count < k or worst <= bd2[k - 1]:
                        stack[sp] = self.node_left[node]
                        sd2[sp] = worst
                        sp += 1
                    stack[sp] = self.node_right[node]
                    sd2[sp] = 0.0
                    sp += 1
        return count

    cdef double _nearest_d2(self, double qx, double qy, double qz) nogil:
        cdef double bd2[1]
        cdef long long bid[1]
        self._knn_core(qx, qy, qz, 1, bd2, bid)
        return bd2[0]

    def nearest_distance(self, q):
        cdef double qx = q[0]
        cdef double qy = q[1]
        cdef double qz = q[2]
        return sqrt(self._nearest_d2(qx, qy, qz))

    def knn(self, q, int k):
        cdef double bd2[MAX_K]
        cdef long long bid[MAX_K]
        if k > self.n:
            k = self.n
        if k > MAX_K:
            raise ValueError(f"k={k} exceeds the compiled cap {MAX_K}")
        cdef double qx = q[0]
        cdef double qy = q[1]
        cdef double qz = q[2]
        cdef int count = self._knn_core(qx, qy, qz, k, bd2, bid)
        dist = np.empty(count, dtype=np.float64)
        ids = np.empty(count, dtype=np.int64)
        cdef double[::1] dv = dist
        cdef long long[::1] iv = ids
        cdef int i
        for i in range(count):
            dv[i] = sqrt(bd2[i])
            iv[i] = bid[i]
        return dist, ids

    def knn_batch(self, Q, int k):
        Q = np.ascontiguousarray(Q, dtype=np.float64)
        cdef double[:, ::1] qv = Q
        cdef int m = qv.shape[0]
        if k > self.n:
            k = self.n
        if k > MAX_K:
            raise ValueError(f"k={k} exceeds the compiled cap {MAX_K}")
        dist = np.empty((m, k), dtype=np.float64)
        ids = np.empty((m, k), dtype=np.int64)
        cdef double[:, ::1] dv = dist
        cdef long long[:, ::1] iv = ids
        cdef double bd2[MAX_K]
        cdef long long bid[MAX_K]
        cdef int i, j
        for i in range(m):
            self._knn_core(qv[i, 0], qv[i, 1], qv[i, 2], k, bd2, bid)
            for j in range(k):
                dv[i, j] = sqrt(bd2[j])
                iv[i, j] = bid[j]
        return dist, ids

    def robust_distance(self, q, int k):
        cdef double bd2[MAX_K]
        cdef long long bid[MAX_K]
        if k > self.n:
            k = self.n
        if k > MAX_K:
            raise ValueError(f"k={k} exceeds the compiled cap {MAX_K}")
        cdef double qx = q[0]
        cdef double qy = q[1]
        cdef double qz = q[2]
        cdef int count = self._knn_core(qx, qy, qz, k, bd2, bid)
        cdef double acc = 0.0
        cdef double d
        cdef int i
        for i in range(count):
            d = sqrt(bd2[i])
            acc += d * d
        return sqrt(acc / count)


cdef double _ray_f(KdTree tree, double ox, double oy, double oz,
                   double dx, double dy, double dz, double t) nogil:
    return sqrt(tree._nearest_d2(ox + t * dx, oy + t * dy, oz + t * dz))


def ray_first_hit(KdTree tree, origin, direction, double t0, double t1,
                  double eps, int max_depth=64):
    """First eps-sublevel dip of the point-set distance along a ray.

    Identical algorithm and arithmetic to the pure backend: Lipschitz
    walk-out from t0, then the dichotomic search with early exit after the
    first completed crossing pair. Returns the hit parameter, or a negative
    value when there is no hit.
    """
    cdef double ox = origin[0]
    cdef double oy = origin[1]
    cdef double oz = origin[2]
    cdef double dx = direction[0]
    cdef double dy = direction[1]
    cdef double dz = direction[2]
    cdef double out
    with nogil:
        out = _ray_first_hit_core(tree, ox, oy, oz, dx, dy, dz,
                                  t0, t1, eps, max_depth)
    return out


cdef double _ray_first_hit_core(KdTree tree, double ox, double oy, double oz,
                                double dx, double dy, double dz,
                                double t0, double t1, double eps,
                                int max_depth) nogil:
    cdef double t = t0
    cdef double ft = _ray_f(tree, ox, oy, oz, dx, dy, dz, t)
    while ft <= eps:
        t = t + (eps - ft) + 0.5 * eps
        if t >= t1:
            return -1.0
        ft = _ray_f(tree, ox, oy, oz, dx, dy, dz, t)

    cdef double sa[STACK_CAP]
    cdef double sb[STACK_CAP]
    cdef double sfa[STACK_CAP]
    cdef double sfb[STACK_CAP]
    cdef int sd[STACK_CAP]
    cdef int sp = 0
    cdef double hits0 = 0.0
    cdef double hits1 = 0.0
    cdef int n_hits = 0
    cdef double a0, b0, fa0, fb0, t_lo, y_lo, t_hi, y_hi
    cdef double k_a, k_b, left, right, mid, fm, fl, fr
    cdef int depth
    cdef double span = t1 - t
    cdef double ftol = F_TOL
    if span > LONG_SEGMENT:
        ftol = F_TOL * (span / LONG_SEGMENT)

    sa[0] = t
    sb[0] = t1
    sfa[0] = ft
    sfb[0] = _ray_f(tree, ox, oy, oz, dx, dy, dz, t1)
    sd[0] = 0
    sp = 1
    while sp > 0:
        sp -= 1
        a0 = sa[sp]
        b0 = sb[sp]
        fa0 = sfa[sp]
        fb0 = sfb[sp]
        depth = sd[sp]
        t_lo = 0.5 * (a0 + b0 - fb0 + fa0)
        y_lo = fa0 - (t_lo - a0)
        t_hi = 0.5 * (a0 + b0 + fb0 - fa0)
        y_hi = fa0 + (t_hi - a0)
        if y_lo >= eps or y_hi <= eps:
            continue
        k_a = -1.0 if fa0 > eps else 1.0
        k_b = 1.0 if fb0 > eps else -1.0
        left = a0 + (eps - fa0) / k_a
        right = b0 + (eps - fb0) / k_b
        mid = 0.5 * (left + right)
        fm = _ray_f(tree, ox, oy, oz, dx, dy, dz, mid)
        if fabs(fm - eps) <= ftol and (right - left) <= eps:
            if (fa0 > eps) == (fb0 > eps):
                if n_hits == 0:
                    hits0 = mid
                    hits1 = mid
                    n_hits = 2
                else:
                    hits1 = mid
                    n_hits = 2
            else:
                if n_hits == 0:
                    hits0 = mid
                    n_hits = 1
                else:
                    hits1 = mid
                    n_hits = 2
            if n_hits >= 2:
                return 0.5 * (hits0 + hits1)
            continue
        if depth + 1 > max_depth:
            return -1.0
        fl = _ray_f(tree, ox, oy, oz, dx, dy, dz, left)
        fr = _ray_f(tree, ox, oy, oz, dx, dy, dz, right)
        sa[sp] = mid
        sb[sp] = right
        sfa[sp] = fm
        sfb[sp] = fr
        sd[sp] = depth + 1
        sp += 1
        sa[sp] = left
        sb[sp] = mid
        sfa[sp] = fl
        sfb[sp] = fm
        sd[sp] = depth + 1
        sp += 1
    if n_hits == 1:
        if _ray_f(tree, ox, oy, oz, dx, dy, dz, t1) <= eps:
            return 0.5 * (hits0 + t1)
    return -1.0


cdef class EnvelopeField:
    """Gaussian-weighted unoriented plane-distance field (compiled twin)."""

    cdef public KdTree tree
    cdef double[:, ::1] nrm
    cdef public object normals
    cdef public int k
    cdef public double h

    def __init__(self, KdTree tree, normals, int k, double h):
        self.tree = tree
        normals = np.ascontiguousarray(normals, dtype=np.float64)
        self.normals = normals
        self.nrm = normals
        self.k = k
        self.h = h

    cdef double _value(self, double qx, double qy, double qz) nogil:
        cdef double bd2[MAX_K]
        cdef long long bid[MAX_K]
        cdef int count = self.tree._knn_core(qx, qy, qz, self.k, bd2, bid)
        cdef double inv_h2 = 1.0 / (self.h * self.h)
        cdef double num = 0.0
        cdef double den = 0.0
        cdef double vx, vy, vz, w, dot, d
        cdef long long i
        cdef int j
        for j in range(count):
            i = bid[j]
            vx = qx - self.tree.pts[i, 0]
            vy = qy - self.tree.pts[i, 1]
            vz = qz - self.tree.pts[i, 2]
            d = sqrt(bd2[j])
            w = exp(-(d * d) * inv_h2)
            dot = vx * self.nrm[i, 0] + vy * self.nrm[i, 1] + vz * self.nrm[i, 2]
            num += fabs(dot) * w
            den += w
        if den == 0.0:
            i = bid[0]
            vx = qx - self.tree.pts[i, 0]
            vy = qy - self.tree.pts[i, 1]
            vz = qz - self.tree.pts[i, 2]
            return fabs(vx * self.nrm[i, 0] + vy * self.nrm[i, 1]
                        + vz * self.nrm[i, 2])
        return num / den

    def value(self, q):
        cdef double qx = q[0]
        cdef double qy = q[1]
        cdef double qz = q[2]
        cdef double out
        with nogil:
            out = self._value(qx, qy, qz)
        return out

    def values(self, Q):
        Q = np.ascontiguousarray(Q, dtype=np.float64)
        cdef double[:, ::1] qv = Q
        cdef int m = qv.shape[0]
        out = np.empty(m, dtype=np.float64)
        cdef double[::1] ov = out
        cdef int i
        with nogil:
            for i in range(m):
                ov[i] = self._value(qv[i, 0], qv[i, 1], qv[i, 2])
        return out

    def segment_reaches_sublevel(self, p0, p1, double eps, int max_depth=64):
        cdef double ax = p0[0]
        cdef double ay = p0[1]
        cdef double az = p0[2]
        cdef double bx = p1[0]
        cdef double by = p1[1]
        cdef double bz = p1[2]
        cdef double dx = bx - ax
        cdef double dy = by - ay
        cdef double dz = bz - az
        cdef double length = sqrt(dx * dx + dy * dy + dz * dz)
        cdef int out
        if length == 0.0:
            return bool(self.value(p0) <= eps)
        cdef double ux = dx / length
        cdef double uy = dy / length
        cdef double uz = dz / length
        with nogil:
            out = _segment_reaches_core(self, ax, ay, az, ux, uy, uz,
                                        length, eps, max_depth)
        return bool(out)


cdef int _segment_reaches_core(EnvelopeField env, double ax, double ay,
                               double az, double ux, double uy, double uz,
                               double length, double eps,
                               int max_depth) nogil:
    cdef double fa = env._value(ax, ay, az)
    if fa <= eps:
        return 1
    cdef double fb = env._value(ax + length * ux, ay + length * uy,
                                az + length * uz)
    if fb <= eps:
        return 1

    cdef double sa[STACK_CAP]
    cdef double sb[STACK_CAP]
    cdef double sfa[STACK_CAP]
    cdef double sfb[STACK_CAP]
    cdef int sd[STACK_CAP]
    cdef int sp
    cdef double a0, b0, fa0, fb0, t_lo, y_lo, t_hi, y_hi
    cdef double k_a, k_b, left, right, mid, fm, fl, fr
    cdef int depth
    cdef double ftol = F_TOL
    if length > LONG_SEGMENT:
        ftol = F_TOL * (length / LONG_SEGMENT)

    sa[0] = 0.0
    sb[0] = length
    sfa[0] = fa
    sfb[0] = fb
    sd[0] = 0
    sp = 1
    while sp > 0:
        sp -= 1
        a0 = sa[sp]
        b0 = sb[sp]
        fa0 = sfa[sp]
        fb0 = sfb[sp]
        depth = sd[sp]
        t_lo = 0.5 * (a0 + b0 - fb0 + fa0)
        y_lo = fa0 - (t_lo - a0)
        t_hi = 0.5 * (a0 + b0 + fb0 - fa0)
        y_hi = fa0 + (t_hi - a0)
        if y_lo >= eps or y_hi <= eps:
            continue
        k_a = -1.0 if fa0 > eps else 1.0
        k_b = 1.0 if fb0 > eps else -1.0
        left = a0 + (eps - fa0) / k_a
        right = b0 + (eps - fb0) / k_b
        mid = 0.5 * (left + right)
        fm = env._value(ax + mid * ux, ay + mid * uy, az + mid * uz)
        if fabs(fm - eps) <= ftol and (right - left) <= eps:
            return 1
        if depth + 1 > max_depth:
            return 0
        fl = env._value(ax + left * ux, ay + left * uy, az + left * uz)
        fr = env._value(ax + right * ux, ay + right * uy, az + right * uz)
        sa[sp] = mid
        sb[sp] = right
        sfa[sp] = fm
        sfb[sp] = fr
        sd[sp] = depth + 1
        sp += 1
        sa[sp] = left
        sb[sp] = mid
        sfa[sp] = fl
        sfb[sp] = fm
        sd[sp] = depth + 1
        sp += 1
    return 0


def tet_shape(double ax, double ay, double az,
              double bx, double by, double bz,
              double cx, double cy, double cz,
              double dx, double dy, double dz):
    """Circumcenter, circumradius, and shortest edge of a tetrahedron.

    Returns (ok, cx, cy, cz, radius, min_edge); ok is 0 for degenerate
    (near-flat) cells, whose circumsphere is meaningless.
    """
    cdef double bax = bx - ax
    cdef double bay = by - ay
    cdef double baz = bz - az
    cdef double cax = cx - ax
    cdef double cay = cy - ay
    cdef double caz = cz - az
    cdef double dax = dx - ax
    cdef double day = dy - ay
    cdef double daz = dz - az
    cdef double det = (bax * (cay * daz - caz * day)
                       - bay * (cax * daz - caz * dax)
                       + baz * (cax * day - cay * dax))
    cdef double rb = 0.5 * (bax * bax + bay * bay + baz * baz)
    cdef double rc = 0.5 * (cax * cax + cay * cay + caz * caz)
    cdef double rd = 0.5 * (dax * dax + day * day + daz * daz)
    if det == 0.0:
        return 0, 0.0, 0.0, 0.0, 0.0, 0.0
    cdef double inv = 1.0 / det
    cdef double ox = (rb * (cay * daz - caz * day)
                      - rc * (bay * daz - baz * day)
                      + rd * (bay * caz - baz * cay)) * inv
    cdef double oy = -(rb * (cax * daz - caz * dax)
                       - rc * (bax * daz - baz * dax)
                       + rd * (bax * caz - baz * cax)) * inv
    cdef double oz = (rb * (cax * day - cay * dax)
                      - rc * (bax * day - bay * dax)
                      + rd * (bax * cay - bay * cax)) * inv
    cdef double radius = sqrt(ox * ox + oy * oy + oz * oz)
    cdef double e2 = bax * bax + bay * bay + baz * baz
    cdef double emin2 = e2
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
    return 1, ax + ox, ay + oy, az + oz, radius, sqrt(emin2)


def orient3d_filtered(double ax, double ay, double az,
                      double bx, double by, double bz,
                      double cx, double cy, double cz,
                      double dx, double dy, double dz):
    """Float det[b-a; c-a; d-a] and its certification bound."""
    cdef double bax = bx - ax
    cdef double bay = by - ay
    cdef double baz = bz - az
    cdef double cax = cx - ax
    cdef double cay = cy - ay
    cdef double caz = cz - az
    cdef double dax = dx - ax
    cdef double day = dy - ay
    cdef double daz = dz - az
    cdef double caydaz = cay * daz
    cdef double cazday = caz * day
    cdef double cazdax = caz * dax
    cdef double caxdaz = cax * daz
    cdef double caxday = cax * day
    cdef double caydax = cay * dax
    cdef double det = (bax * (caydaz - cazday)
                       + bay * (cazdax - caxdaz)
                       + baz * (caxday - caydax))
    cdef double permanent = ((fabs(caydaz) + fabs(cazday)) * fabs(bax)
                             + (fabs(cazdax) + fabs(caxdaz)) * fabs(bay)
                             + (fabs(caxday) + fabs(caydax)) * fabs(baz))
    return det, _O3D_BOUND * permanent


def insphere_filtered(double ax, double ay, double az,
                      double bx, double by, double bz,
                      double cx, double cy, double cz,
                      double dx, double dy, double dz,
                      double ex, double ey, double ez):
    """Float lifted in-sphere determinant and its certification bound."""
    cdef double aex = ax - ex
    cdef double aey = ay - ey
    cdef double aez = az - ez
    cdef double bex = bx - ex
    cdef double bey = by - ey
    cdef double bez = bz - ez
    cdef double cex = cx - ex
    cdef double cey = cy - ey
    cdef double cez = cz - ez
    cdef double dex = dx - ex
    cdef double dey = dy - ey
    cdef double dez = dz - ez

    cdef double alift = aex * aex + aey * aey + aez * aez
    cdef double blift = bex * bex + bey * bey + bez * bez
    cdef double clift = cex * cex + cey * cey + cez * cez
    cdef double dlift = dex * dex + dey * dey + dez * dez

    cdef double ab = aex * bey - bex * aey
    cdef double bc = bex * cey - cex * bey
    cdef double cd = cex * dey - dex * cey
    cdef double da = dex * aey - aex * dey
    cdef double ac = aex * cey - cex * aey
    cdef double bd = bex * dey - dex * bey

    cdef double abc = aez * bc - bez * ac + cez * ab
    cdef double bcd = bez * cd - cez * bd + dez * bc
    cdef double cda = cez * da + dez * ac + aez * cd
    cdef double dab = dez * ab + aez * bd + bez * da

    cdef double det = dlift * abc - clift * dab + blift * cda - alift * bcd

    cdef double aezplus = fabs(aez)
    cdef double bezplus = fabs(bez)
    cdef double cezplus = fabs(cez)
    cdef double dezplus = fabs(dez)
    cdef double abplus = fabs(ab)
    cdef double bcplus = fabs(bc)
    cdef double cdplus = fabs(cd)
    cdef double daplus = fabs(da)
    cdef double acplus = fabs(ac)
    cdef double bdplus = fabs(bd)
    cdef double permanent = (
        (cdplus * bezplus + bdplus * cezplus + bcplus * dezplus) * alift
        + (cdplus * aezplus + acplus * dezplus + daplus * cezplus) * blift
        + (bdplus * aezplus + abplus * dezplus + daplus * bezplus) * clift
        + (bcplus * aezplus + abplus * cezplus + acplus * bezplus) * dlift
    )
    return det, _ISP_BOUND * permanent
