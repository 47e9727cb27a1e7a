"""Adaptive-precision geometric predicates with symbolic tie-breaking.

Each predicate first runs a floating-point filter from the active kernel
backend; when the filter cannot certify the sign, the exact rational
evaluation decides. Exact zeros in the in-sphere test are resolved by a
deterministic symbolic perturbation keyed to vertex ids, so the Delaunay
machinery never sees a tie.
"""

from __future__ import annotations

import numpy as np

from . import backend, exactmath


def orient3d(a, b, c, d) -> int:
    """Sign of det[b-a; c-a; d-a]; +1 for a right-handed tetrahedron."""
    det, bound = backend.orient3d_filtered(
        a[0], a[1], a[2], b[0], b[1], b[2],
        c[0], c[1], c[2], d[0], d[1], d[2],
    )
    if det > bound:
        return 1
    if det < -bound:
        return -1
    return exactmath.orient3d_sign(a, b, c, d)


def insphere_conflict(a, b, c, d, e, ids) -> bool:
    """True iff e is inside the circumsphere of the right-handed (a,b,c,d).

    ``ids`` are the five vertex ids (a, b, c, d, e) used by the symbolic
    perturbation; exact cospherical ties resolve deterministically.
    """
    det, bound = backend.insphere_filtered(
        a[0], a[1], a[2], b[0], b[1], b[2], c[0], c[1], c[2],
        d[0], d[1], d[2], e[0], e[1], e[2],
    )
    if det > bound:
        return False
    if det < -bound:
        return True
    return exactmath.insphere_perturbed((a, b, c, d, e), ids) < 0


def incircle_conflict(a, b, c, e, ids) -> bool:
    """Coplanar hull-facet conflict: e inside the circumcircle of (a, b, c).

    All four points must be (exactly) coplanar in 3D; they are projected
    along the dominant axis of the facet normal. Symbolically perturbed, so
    cocircular ties resolve deterministically.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    e = np.asarray(e, dtype=np.float64)
    n = np.cross(b - a, c - a)
    axis = int(np.argmax(np.abs(n)))
    u, v = (axis + 1) % 3, (axis + 2) % 3
    p2 = [(p[u], p[v]) for p in (a, b, c, e)]
    orient = exactmath.orient2d_sign(p2[0], p2[1], p2[2])
    if orient == 0:
        raise ArithmeticError("degenerate hull facet in coplanar conflict test")
    s = exactmath.incircle_perturbed(p2, ids)
    # incircle_sign is positive-inside for counterclockwise (a, b, c).
    return (s > 0) == (orient > 0)
