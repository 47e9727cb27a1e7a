"""Reach-aware multi-domain discretization by Delaunay refinement.

The domain is a loose bounding sphere of the input. Cells whose barycenter
has envelope value at most the reach level form the ENVELOPE sub-domain and
are refined finely (graded by distance from the inferred surface); the rest
of the ball is the SHELL, kept coarse so large holes are bridged smoothly.
Refinement inserts circumcenters of violating cells, projecting those that
escape the ball onto its boundary.
"""

from __future__ import annotations

import heapq
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import backend
from .cloud import BoundingSphere, PointCloud, SpatialIndex, loose_bounding_sphere
from .delaunay import Triangulation
from .errors import BudgetExceededError, StageError

log = logging.getLogger(__name__)

ENVELOPE = 0
SHELL = 1
OUTSIDE = 2

LABEL_NAMES = {ENVELOPE: "envelope", SHELL: "shell", OUTSIDE: "outside"}


@dataclass(frozen=True)
class RefinementCriteria:
    radius_edge_bound: float = 2.0
    envelope_cell_size: Optional[float] = None  # default: the reach
    shell_cell_size: Optional[float] = None  # default: sphere radius / 8
    sphere_facet_size: Optional[float] = None  # default: sphere radius / 8
    envelope_level_scale: float = 1.0  # envelope threshold = scale * reach
    grading: float = 1.0  # envelope cell size grows as grading * I_u
    vertex_budget: int = 2_000_000


@dataclass
class MultiDomain:
    tri: Triangulation
    labels: dict  # alive finite cell id -> ENVELOPE | SHELL | OUTSIDE
    envelope: object  # backend EnvelopeField
    level: float
    sphere: BoundingSphere
    criteria: RefinementCriteria
    input_vertex_ids: np.ndarray = field(default=None)

    def label_of(self, cell: int) -> int:
        return self.labels[cell]


def mean_knn_spacing(index: SpatialIndex, k: int = 7) -> float:
    """Mean over points of the mean distance to their k-1 nearest others."""
    dist, _ = index.k_nearest_batch(index.cloud.points, min(k, len(index.cloud)))
    if dist.shape[1] < 2:
        return 0.0
    return float(dist[:, 1:].mean())


def build_envelope(index: SpatialIndex, normals, k: int = 12,
                   h: Optional[float] = None):
    """Envelope field over the cloud; bandwidth defaults to 2x mean spacing."""
    if h is None:
        h = 2.0 * mean_knn_spacing(index)
        if h <= 0.0:
            raise StageError("multidomain", "cannot infer Gaussian bandwidth")
    return backend.EnvelopeField(index.kdtree, normals, k, h), h


def envelope_function(index: SpatialIndex, normals, x, k: int, h: float) -> float:
    """Gaussian-weighted mean unoriented plane distance at one point."""
    env = backend.EnvelopeField(index.kdtree, normals, k, h)
    return float(env.value(np.asarray(x, dtype=np.float64)))


def fibonacci_sphere(center, radius: float, count: int) -> np.ndarray:
    """Quasi-uniform points on a sphere (golden-angle spiral)."""
    center = np.asarray(center, dtype=np.float64)
    ga = math.pi * (3.0 - math.sqrt(5.0))
    out = np.empty((count, 3))
    for i in range(count):
        z = 1.0 - (2.0 * i + 1.0) / count
        rxy = math.sqrt(max(0.0, 1.0 - z * z))
        phi = ga * i
        out[i] = center + radius * np.array(
            [rxy * math.cos(phi), rxy * math.sin(phi), z]
        )
    return out


def _boundary_point_count(radius: float, facet_size: float) -> int:
    # hexagonal-packing area per point at spacing s is (sqrt(3)/2) s^2
    n = (8.0 * math.pi / math.sqrt(3.0)) * (radius / facet_size) ** 2
    return max(64, int(math.ceil(n)))


def poisson_subsample(points: np.ndarray, radius: float) -> np.ndarray:
    """Greedy id-ordered subsample with pairwise spacing >= radius.

    Used to seed the triangulation with just enough on-surface vertices for
    envelope discovery without blanketing the sheet (a dense layer of
    vertices would decouple the signs across it).
    """
    if radius <= 0:
        return np.arange(len(points))
    inv = 1.0 / radius
    grid: dict = {}
    kept = []
    r2 = radius * radius
    for i, p in enumerate(points):
        key = (int(math.floor(p[0] * inv)), int(math.floor(p[1] * inv)),
               int(math.floor(p[2] * inv)))
        ok = True
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for dz in (-1, 0, 1):
                    for j in grid.get((key[0] + dx, key[1] + dy, key[2] + dz), ()):
                        d = points[j] - p
                        if d[0] * d[0] + d[1] * d[1] + d[2] * d[2] < r2:
                            ok = False
                            break
                    if not ok:
                        break
                if not ok:
                    break
            if not ok:
                break
        if ok:
            kept.append(i)
            grid.setdefault(key, []).append(i)
    return np.asarray(kept, dtype=np.int64)


class _Refiner:
    """Worst-first circumcenter insertion until all criteria hold."""

    def __init__(self, tri, env, level, sphere, crit, env_size, shell_size):
        self.tri = tri
        self.env = env
        self.level = level
        self.sphere = sphere
        self.crit = crit
        self.env_size = env_size
        self.shell_size = shell_size
        self.heap = []
        self.counter = 0
        self.skipped = set()

    def allowed_radius(self, iu: float) -> float:
        if iu <= self.level:
            graded = self.crit.grading * iu
            return max(self.env_size, min(graded, self.shell_size))
        return self.shell_size

    def cell_iu(self, cell: int) -> float:
        row = self.tri.cells[cell]
        v = self.tri.verts
        a, b, c, d = row[0], row[1], row[2], row[3]
        bary = (
            0.25 * (v[a, 0] + v[b, 0] + v[c, 0] + v[d, 0]),
            0.25 * (v[a, 1] + v[b, 1] + v[c, 1] + v[d, 1]),
            0.25 * (v[a, 2] + v[b, 2] + v[c, 2] + v[d, 2]),
        )
        return float(self.env.value(bary))

    def score(self, cell: int):
        tri = self.tri
        ok, center, radius, emin = tri.cell_shape(cell)
        if not ok:
            return None
        iu = self.cell_iu(cell)
        size_ratio = radius / self.allowed_radius(iu)
        re_ratio = (radius / emin) / self.crit.radius_edge_bound if emin > 0 else np.inf
        return max(size_ratio, re_ratio), center

    def push(self, cell: int):
        tri = self.tri
        if not tri.alive[cell] or tri.is_infinite(cell):
            return
        result = self.score(cell)
        if result is None:
            return
        s, _ = result
        if s <= 1.0 + 1e-9:
            return
        self.counter += 1
        heapq.heappush(self.heap, (-s, self.counter, cell, int(tri.gen[cell])))

    def run(self):
        tri = self.tri
        center = self.sphere.center
        r = self.sphere.radius
        new_cells: list[int] = []
        tri._new_cells_hook = new_cells.extend
        try:
            for c in range(tri.n_cells):
                if tri.alive[c] and not tri.is_infinite(c):
                    self.push(c)
            while self.heap:
                neg, _, cell, gen = heapq.heappop(self.heap)
                if not tri.alive[cell] or tri.gen[cell] != gen:
                    continue
                if (cell, gen) in self.skipped:
                    continue
                result = self.score(cell)
                if result is None:
                    continue
                s, cc = result
                if s <= 1.0 + 1e-9:
                    continue
                off = cc - center
                dist = float(np.linalg.norm(off))
                if dist >= r * (1.0 - 1e-12):
                    p = center + off * (r / dist)
                else:
                    p = cc
                if tri.n_verts >= self.crit.vertex_budget:
                    raise BudgetExceededError(
                        "multidomain",
                        f"vertex budget {self.crit.vertex_budget} exhausted "
                        f"({len(self.heap)} cells still queued)",
                    )
                before = tri.n_verts
                new_cells.clear()
                tri.insert(p, hint=cell)
                if tri.n_verts == before:
                    # duplicate insertion point: leave the cell as is
                    self.skipped.add((cell, gen))
                    continue
                for c in new_cells:
                    self.push(c)
        finally:
            tri._new_cells_hook = None


def refine_multidomain(cloud: PointCloud, index: SpatialIndex, normals,
                       reach_value: float,
                       criteria: RefinementCriteria = RefinementCriteria(),
                       envelope_k: int = 12) -> MultiDomain:
    """Discretize the bounding-sphere multi-domain around the cloud.

    Seeds the triangulation with boundary-sphere points plus every input
    point, then refines by circumcenter insertion until every finite cell
    meets the radius-edge bound and its sub-domain's size bound.
    """
    if reach_value <= 0:
        raise StageError("multidomain", "reach must be positive")
    sphere = loose_bounding_sphere(cloud)
    env, h = build_envelope(index, normals, k=envelope_k)
    level = criteria.envelope_level_scale * reach_value

    env_size = criteria.envelope_cell_size
    if env_size is None:
        env_size = reach_value
    shell_size = criteria.shell_cell_size
    if shell_size is None:
        shell_size = sphere.radius / 8.0
    facet_size = criteria.sphere_facet_size
    if facet_size is None:
        facet_size = sphere.radius / 8.0

    tri = Triangulation(capacity=max(1024, 2 * len(cloud)))
    boundary = fibonacci_sphere(sphere.center, sphere.radius,
                                _boundary_point_count(sphere.radius, facet_size))
    for p in boundary:
        tri.insert(p)
    # sparse on-surface seeds: enough for the refinement to discover every
    # envelope component, sparse enough not to blanket the inferred surface
    seed_spacing = min(env_size, level)
    seed_ids = poisson_subsample(cloud.points, seed_spacing)
    for i in seed_ids:
        tri.insert(cloud.points[i])

    refiner = _Refiner(tri, env, level, sphere, criteria, env_size, shell_size)
    refiner.run()

    labels = {}
    for c in tri.finite_cells():
        iu = refiner.cell_iu(c)
        labels[c] = ENVELOPE if iu <= level else SHELL
    log.info(
        "multidomain: %d vertices, %d cells (%d envelope), level=%.4g h=%.4g",
        tri.n_verts, len(labels),
        sum(1 for v in labels.values() if v == ENVELOPE), level, h,
    )
    return MultiDomain(tri=tri, labels=labels, envelope=env, level=level,
                       sphere=sphere, criteria=criteria,
                       input_vertex_ids=input_ids)


def write_medit_mesh(path, domain: MultiDomain) -> None:
    """Debug export: vertex list, tetra list, and per-cell label column."""
    tri = domain.tri
    cells = sorted(domain.labels)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# vertices {tri.n_verts}\n")
        for i in range(tri.n_verts):
            v = tri.verts[i]
            fh.write(f"v {v[0]!r} {v[1]!r} {v[2]!r}\n")
        fh.write(f"# tetrahedra {len(cells)}\n")
        for c in cells:
            row = tri.cells[c]
            name = LABEL_NAMES[domain.labels[c]]
            fh.write(f"t {row[0]} {row[1]} {row[2]} {row[3]} {name}\n")
