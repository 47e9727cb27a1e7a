"""Exact evaluation of geometric predicates.

Doubles are dyadic rationals, so scaling a group of coordinates by a common
power of two turns them into (arbitrary-precision) integers; determinants
evaluated over those integers give the exact sign. These routines are the
slow path behind the floating-point filters in the kernel backends, and the
ground truth for the symbolic tie-breaking rules.
"""

import math


def _sign(x) -> int:
    if x > 0:
        return 1
    if x < 0:
        return -1
    return 0


def _to_ints(values):
    """Scale floats by one power of two so all become exact integers."""
    shift = 0
    parts = []
    for v in values:
        if v == 0.0:
            parts.append((0, 0))
            continue
        m, e = math.frexp(v)
        # v = m_int * 2^(e - 53) with m_int a 53-bit integer
        parts.append((int(math.ldexp(m, 53)), e - 53))
        shift = max(shift, 53 - e)
    return [m_int << (ex + shift) if m_int else 0 for m_int, ex in parts]


def orient3d_sign(a, b, c, d) -> int:
    """Exact sign of det[b-a; c-a; d-a]. Positive = (a,b,c,d) right-handed."""
    vals = _to_ints([a[0], a[1], a[2], b[0], b[1], b[2],
                     c[0], c[1], c[2], d[0], d[1], d[2]])
    ax, ay, az, bx, by, bz, cx, cy, cz, dx, dy, dz = vals
    bax, bay, baz = bx - ax, by - ay, bz - az
    cax, cay, caz = cx - ax, cy - ay, cz - az
    dax, day, daz = dx - ax, dy - ay, dz - az
    det = (
        bax * (cay * daz - caz * day)
        - bay * (cax * daz - caz * dax)
        + baz * (cax * day - cay * dax)
    )
    return _sign(det)


def insphere_sign(a, b, c, d, e) -> int:
    """Exact sign of the lifted in-sphere determinant.

    For a positively oriented (a, b, c, d), a negative sign means e lies
    strictly inside the circumsphere.
    """
    vals = _to_ints([a[0], a[1], a[2], b[0], b[1], b[2], c[0], c[1], c[2],
                     d[0], d[1], d[2], e[0], e[1], e[2]])
    ex, ey, ez = vals[12], vals[13], vals[14]
    rows = []
    for i in range(4):
        px = vals[3 * i] - ex
        py = vals[3 * i + 1] - ey
        pz = vals[3 * i + 2] - ez
        rows.append((px, py, pz, px * px + py * py + pz * pz))
    return _sign(_det4(rows))


def _det3(r0, r1, r2):
    return (
        r0[0] * (r1[1] * r2[2] - r1[2] * r2[1])
        - r0[1] * (r1[0] * r2[2] - r1[2] * r2[0])
        + r0[2] * (r1[0] * r2[1] - r1[1] * r2[0])
    )


def _det4(rows):
    # expansion along the lift column: det = sum_i (-1)^(i+3) L_i M_i
    det = 0
    sign = 1
    for i in range(4):
        sub = [rows[j][:3] for j in range(4) if j != i]
        det += sign * rows[i][3] * _det3(*sub)
        sign = -sign
    return -det


def insphere_perturbed(points5, ids5) -> int:
    """Symbolically perturbed in-sphere test; never returns 0.

    Each point's paraboloid lift is lowered by eps^(id+1); ties on the exact
    determinant are resolved by the lowest-id nonzero cofactor. Returns the
    sign the exact determinant would have after perturbation.
    """
    s = insphere_sign(*points5)
    if s != 0:
        return s
    order = sorted(range(5), key=lambda i: ids5[i])
    for i in order:
        rest = [points5[j] for j in range(5) if j != i]
        cof = orient3d_sign(*rest)
        if cof != 0:
            # d(det5)/d(lift_i) = (-1)^i * orient_det(rest) for 0-based row i;
            # lowering lift_i by delta changes det5 by -delta * that cofactor.
            row_sign = 1 if i % 2 == 0 else -1
            return -row_sign * cof
    raise ArithmeticError("fully degenerate five-point configuration")


def orient2d_sign(a, b, c) -> int:
    ax, ay, bx, by, cx, cy = _to_ints([a[0], a[1], b[0], b[1], c[0], c[1]])
    det = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    return _sign(det)


def incircle_sign(a, b, c, d) -> int:
    """Exact sign of the 2D lifted determinant.

    For counterclockwise (a, b, c), positive means d strictly inside the
    circumcircle.
    """
    vals = _to_ints([a[0], a[1], b[0], b[1], c[0], c[1], d[0], d[1]])
    dx, dy = vals[6], vals[7]
    rows = []
    for i in range(3):
        px = vals[2 * i] - dx
        py = vals[2 * i + 1] - dy
        rows.append((px, py, px * px + py * py))
    return _sign(_det3(rows[0], rows[1], rows[2]))


def incircle_perturbed(points4, ids4) -> int:
    """Symbolically perturbed 2D in-circle test; never returns 0."""
    s = incircle_sign(*points4)
    if s != 0:
        return s
    order = sorted(range(4), key=lambda i: ids4[i])
    for i in order:
        rest = [points4[j] for j in range(4) if j != i]
        cof = orient2d_sign(*rest)
        if cof != 0:
            row_sign = 1 if i % 2 == 0 else -1
            return -row_sign * cof
    raise ArithmeticError("fully degenerate four-point configuration")
