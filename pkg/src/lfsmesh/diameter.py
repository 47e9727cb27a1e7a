"""Dual-cone shape diameter estimation on raw point clouds.

Casts random rays inside two opposite cones around the (unoriented) normal,
finds the first point on each ray where the point-set distance dips below
the sampling threshold eps, and combines the two cone distances into the
extended shape diameter: the smaller of local thickness and separation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import backend
from .cloud import SpatialIndex
from .errors import InputError

# Standoff (in multiples of eps) before the ray search starts, so the sheet
# carrying the query point itself does not register as its own antipode.
STANDOFF_FACTOR = 2.0


@dataclass(frozen=True)
class ConeSearchParams:
    apex_angle_deg: float = 10.0
    rays_per_cone: int = 30
    antipodal_count: int = 6
    rng_seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.apex_angle_deg <= 90.0):
            raise InputError("apex angle must be in [0, 90] degrees")
        if self.rays_per_cone < 1 or self.antipodal_count < 1:
            raise InputError("ray and antipodal counts must be >= 1")


@dataclass
class DiameterSample:
    value: float
    kind: str  # thickness | separation | fallback
    antipodal_hits: int


def sample_cone_directions(axis, apex_angle_deg: float, count: int,
                           rng: np.random.Generator) -> np.ndarray:
    """Directions uniform over the spherical cap of the given half-angle."""
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    # deterministic tangent frame
    ref = np.array([1.0, 0.0, 0.0])
    if abs(axis[0]) > 0.9:
        ref = np.array([0.0, 1.0, 0.0])
    e1 = np.cross(axis, ref)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(axis, e1)

    cos_cap = math.cos(math.radians(apex_angle_deg))
    out = np.empty((count, 3))
    for i in range(count):
        c = 1.0 - rng.random() * (1.0 - cos_cap)
        s = math.sqrt(max(0.0, 1.0 - c * c))
        phi = 2.0 * math.pi * rng.random()
        out[i] = c * axis + s * (math.cos(phi) * e1 + math.sin(phi) * e2)
    return out


def _lex_canonical(axis) -> bool:
    """True when the axis is the lexicographically positive one of {n, -n}."""
    for v in axis:
        if v > 0.0:
            return True
        if v < 0.0:
            return False
    return True


def _cone_rng(params: ConeSearchParams, point_id: int, flip: bool):
    return np.random.default_rng(
        np.random.SeedSequence(
            entropy=params.rng_seed,
            spawn_key=(int(point_id) & 0x7FFFFFFF, 1 if flip else 0),
        )
    )


def _cone_distance(index, x, axis, params, eps, t_max, point_id):
    """RMS distance to the k_c nearest antipodal hits inside one cone."""
    rng = _cone_rng(params, point_id, not _lex_canonical(axis))
    dirs = sample_cone_directions(axis, params.apex_angle_deg,
                                  params.rays_per_cone, rng)
    t0 = STANDOFF_FACTOR * eps
    hits = []
    tree = index.kdtree
    for d in dirs:
        t = backend.ray_first_hit(tree, x, d, t0, t_max, eps)
        if t > 0.0:
            hits.append(t)
    if not hits:
        return math.inf, 0
    hits.sort()
    kept = hits[: params.antipodal_count]
    acc = 0.0
    for t in kept:
        acc += t * t
    return math.sqrt(acc / len(kept)), len(hits)


def shape_diameter(index: SpatialIndex, x, n, params: ConeSearchParams,
                   eps: float, fallback_diameter: float,
                   point_id: int = 0) -> DiameterSample:
    """Extended shape diameter at x: min of the two opposite cone distances.

    ``n`` is the unoriented local normal; per-cone RNG streams are seeded
    from the canonical representation of the axis pair, so swapping n for -n
    returns the identical sample. Cones with no antipodal hit contribute
    +inf; if both miss, the loose bounding sphere diameter is used.
    """
    x = np.asarray(x, dtype=np.float64)
    n = np.asarray(n, dtype=np.float64)
    nn = np.linalg.norm(n)
    if not (abs(nn - 1.0) <= 1e-6):
        raise InputError("axis must be unit length")
    t_max = fallback_diameter
    d_plus, hits_plus = _cone_distance(index, x, n, params, eps, t_max, point_id)
    d_minus, hits_minus = _cone_distance(index, x, -n, params, eps, t_max, point_id)
    total_hits = hits_plus + hits_minus
    if total_hits == 0:
        return DiameterSample(value=fallback_diameter, kind="fallback",
                              antipodal_hits=0)
    if d_plus <= d_minus:
        value, kind = d_plus, "thickness"
    else:
        value, kind = d_minus, "separation"
    value = min(value, fallback_diameter)
    return DiameterSample(value=value, kind=kind, antipodal_hits=total_hits)
