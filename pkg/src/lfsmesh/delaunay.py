"""Incremental 3D Delaunay triangulation (Bowyer-Watson).

Cells store 4 vertex ids plus 4 neighbor ids (neighbor[i] lies opposite
vertex i). The convex hull is closed by cells containing the infinite
vertex id -1. Finite cells are kept positively oriented; conflicts are
decided by adaptive-precision predicates with a deterministic symbolic
perturbation, so degenerate (cospherical) inputs are handled exactly.
"""

from __future__ import annotations

import numpy as np

from . import backend, exactmath
from .errors import ContractViolationError, DegenerateInputError
from .predicates import incircle_conflict

INF = -1

# outward-oriented facet opposite each local vertex slot (parity-corrected)
_FACET = ((1, 2, 3), (0, 3, 2), (0, 1, 3), (0, 2, 1))

_DUP_TOL = 1e-12


class Triangulation:
    """Growable Delaunay triangulation over explicitly inserted points."""

    def __init__(self, capacity: int = 64):
        self.verts = np.empty((capacity, 3), dtype=np.float64)
        self.n_verts = 0
        self.cells = np.empty((capacity * 8, 4), dtype=np.int64)
        self.nbrs = np.empty((capacity * 8, 4), dtype=np.int64)
        self.alive = np.zeros(capacity * 8, dtype=bool)
        self.gen = np.zeros(capacity * 8, dtype=np.int64)
        self.infinite = np.zeros(capacity * 8, dtype=bool)
        self.n_cells = 0
        self._free: list[int] = []
        self.incident_cell = np.full(capacity, -1, dtype=np.int64)
        self._last_cell = -1
        self._walk_counter = 0
        self._seeded = False
        self._new_cells_hook = None  # callable(list[int]) for refiners

    # -- storage ------------------------------------------------------------

    def _grow_verts(self):
        cap = len(self.verts)
        if self.n_verts >= cap:
            self.verts = np.resize(self.verts, (cap * 2, 3))
            inc = np.full(cap * 2, -1, dtype=np.int64)
            inc[:cap] = self.incident_cell
            self.incident_cell = inc

    def _new_cell(self, a, b, c, d) -> int:
        if self._free:
            slot = self._free.pop()
        else:
            slot = self.n_cells
            if slot >= len(self.cells):
                cap = len(self.cells)
                self.cells = np.resize(self.cells, (cap * 2, 4))
                self.nbrs = np.resize(self.nbrs, (cap * 2, 4))
                self.alive = np.resize(self.alive, cap * 2)
                self.alive[cap:] = False
                self.gen = np.resize(self.gen, cap * 2)
                self.infinite = np.resize(self.infinite, cap * 2)
            self.n_cells += 1
        self.cells[slot] = (a, b, c, d)
        self.nbrs[slot] = (-1, -1, -1, -1)
        self.alive[slot] = True
        self.gen[slot] += 1
        inf_cell = False
        for v in (a, b, c, d):
            if v == INF:
                inf_cell = True
            else:
                self.incident_cell[v] = slot
        self.infinite[slot] = inf_cell
        return slot

    def _kill_cell(self, slot: int):
        self.alive[slot] = False
        self._free.append(slot)

    # -- queries ------------------------------------------------------------

    def is_infinite(self, c: int) -> bool:
        return bool(self.infinite[c])

    def cell_vertices(self, c: int):
        return self.cells[c]

    def finite_cells(self):
        """Ids of alive finite cells, ascending."""
        out = []
        for c in range(self.n_cells):
            if self.alive[c] and not self.is_infinite(c):
                out.append(c)
        return out

    def finite_edges(self):
        """Unique (u, v) vertex pairs (u < v) over alive finite-finite edges."""
        seen = set()
        for c in range(self.n_cells):
            if not self.alive[c]:
                continue
            row = self.cells[c]
            for i in range(4):
                vi = row[i]
                if vi == INF:
                    continue
                for j in range(i + 1, 4):
                    vj = row[j]
                    if vj == INF:
                        continue
                    key = (vi, vj) if vi < vj else (vj, vi)
                    seen.add(key)
        return sorted(seen)

    def incident_cells_of_edge(self, u: int, v: int):
        """All alive cells around the edge (u, v)."""
        start = self.incident_cell[u]
        out = []
        stack = [start]
        visited = {start}
        while stack:
            c = stack.pop()
            if c < 0 or not self.alive[c]:
                continue
            row = self.cells[c]
            has_u = row[0] == u or row[1] == u or row[2] == u or row[3] == u
            if not has_u:
                continue
            has_v = row[0] == v or row[1] == v or row[2] == v or row[3] == v
            if has_v:
                out.append(c)
            for nb in self.nbrs[c]:
                if nb >= 0 and nb not in visited:
                    visited.add(nb)
                    stack.append(nb)
        return out

    # -- geometry helpers ----------------------------------------------------

    def _orient_ids(self, ia, ib, ic, px, py, pz) -> int:
        """Exact orientation sign of (vertex ia, ib, ic, point p)."""
        v = self.verts
        det, bound = backend.orient3d_filtered(
            v[ia, 0], v[ia, 1], v[ia, 2], v[ib, 0], v[ib, 1], v[ib, 2],
            v[ic, 0], v[ic, 1], v[ic, 2], px, py, pz,
        )
        if det > bound:
            return 1
        if det < -bound:
            return -1
        return exactmath.orient3d_sign(v[ia], v[ib], v[ic], (px, py, pz))

    def _orient(self, ia, ib, ic, idd, p=None):
        if p is None:
            p = self.verts[idd]
        return self._orient_ids(ia, ib, ic, p[0], p[1], p[2])

    def _conflict(self, cell: int, p, pid: int) -> bool:
        row = self.cells[cell]
        v = self.verts
        px, py, pz = p[0], p[1], p[2]
        if not self.infinite[cell]:
            a, b, c, d = row
            det, bound = backend.insphere_filtered(
                v[a, 0], v[a, 1], v[a, 2], v[b, 0], v[b, 1], v[b, 2],
                v[c, 0], v[c, 1], v[c, 2], v[d, 0], v[d, 1], v[d, 2],
                px, py, pz,
            )
            if det > bound:
                return False
            if det < -bound:
                return True
            return exactmath.insphere_perturbed(
                (v[a], v[b], v[c], v[d], (px, py, pz)),
                (int(a), int(b), int(c), int(d), pid),
            ) < 0
        # infinite cell: conflict iff p is strictly outside the hull facet,
        # or coplanar with it and inside its circumcircle
        slot = 0
        while row[slot] != INF:
            slot += 1
        f = _FACET[slot]
        a, b, c = row[f[0]], row[f[1]], row[f[2]]
        o = self._orient_ids(a, b, c, px, py, pz)
        if o > 0:
            return True
        if o < 0:
            return False
        return incircle_conflict(
            v[a], v[b], v[c], (px, py, pz),
            (int(a), int(b), int(c), pid),
        )

    # -- point location -------------------------------------------------------

    def locate(self, p, hint: int = -1) -> int:
        """Cell containing p (an infinite cell when p is outside the hull).

        Deterministic visibility walk; falls back to a linear scan if the
        walk revisits a cell (possible only in degenerate configurations).
        """
        p = np.asarray(p, dtype=np.float64)
        px, py, pz = p[0], p[1], p[2]
        c = hint if hint >= 0 and self.alive[hint] else self._last_cell
        if c < 0 or not self.alive[c]:
            c = next(i for i in range(self.n_cells) if self.alive[i])
        visited = set()
        # tiny LCG for a per-walk deterministic facet permutation
        state = (self._walk_counter * 2654435761 + 97) & 0xFFFFFFFF
        self._walk_counter += 1
        while True:
            if c in visited:
                return self._locate_scan(p)
            visited.add(c)
            if self.is_infinite(c):
                if self._conflict(c, p, -2):
                    return c
                row = self.cells[c]
                slot = 0
                while row[slot] != INF:
                    slot += 1
                c = self.nbrs[c][slot]  # hop to the finite side of the hull
                continue
            row = self.cells[c]
            state = (state * 1103515245 + 12345) & 0x7FFFFFFF
            base = state & 3
            moved = False
            for k in range(4):
                i = (base + k) & 3
                f = _FACET[i]
                o = self._orient_ids(row[f[0]], row[f[1]], row[f[2]],
                                     px, py, pz)
                if o > 0:
                    nxt = self.nbrs[c][i]
                    if nxt < 0:
                        raise ContractViolationError("walk fell off the mesh")
                    c = nxt
                    moved = True
                    break
            if not moved:
                self._last_cell = c
                return c

    def _locate_scan(self, p):
        for c in range(self.n_cells):
            if not self.alive[c]:
                continue
            if self.is_infinite(c):
                continue
            row = self.cells[c]
            if all(
                self._orient_ids(row[f[0]], row[f[1]], row[f[2]],
                                 p[0], p[1], p[2]) <= 0
                for f in _FACET
            ):
                return c
        for c in range(self.n_cells):  # outside the hull
            if self.alive[c] and self.is_infinite(c) and self._conflict(c, p, -2):
                return c
        raise ContractViolationError("point not located in any cell")

    def nearest_vertex_in_cell(self, cell: int, p) -> tuple[int, float]:
        best, best_d = -1, np.inf
        for v in self.cells[cell]:
            if v == INF:
                continue
            d = float(np.linalg.norm(self.verts[v] - p))
            if d < best_d:
                best, best_d = v, d
        return best, best_d

    # -- insertion -------------------------------------------------------------

    def _seed(self, quad):
        """Initial complex from 4 non-coplanar vertex ids + 4 infinite cells."""
        a, b, c, d = quad
        if self._orient(a, b, c, d) < 0:
            c, d = d, c
        t = self._new_cell(a, b, c, d)
        infs = []
        for i in range(4):
            f = _FACET[i]
            row = self.cells[t]
            cell = self._new_cell(row[f[0]], row[f[2]], row[f[1]], INF)
            infs.append(cell)
            self.nbrs[cell][3] = t
            self.nbrs[t][i] = cell
        # wire infinite cells to each other through their shared facets
        self._wire_new_cells(infs + [t])
        self._seeded = True

    def _try_seed(self) -> bool:
        """Find 4 affinely independent stored points and build the complex.

        Remaining stored points are then inserted by location. Runs only
        while the triangulation is still flat; O(n^3) in the worst case but
        instantaneous for inputs whose first points are in general position.
        """
        n = self.n_verts
        if n < 4:
            return False
        last = n - 1
        for i in range(last):
            for j in range(i + 1, last):
                for k in range(j + 1, last):
                    if self._orient(i, j, k, last) != 0:
                        quad = (i, j, k, last)
                        self._seed(quad)
                        used = set(quad)
                        for v in range(n):
                            if v not in used:
                                self._insert_located(self.verts[v], v)
                        return True
        return False

    def _wire_new_cells(self, cells):
        facet_map = {}
        for cell in cells:
            row = self.cells[cell]
            for i in range(4):
                f = _FACET[i]
                key = tuple(sorted((int(row[f[0]]), int(row[f[1]]), int(row[f[2]]))))
                if key in facet_map:
                    other, j = facet_map.pop(key)
                    self.nbrs[cell][i] = other
                    self.nbrs[other][j] = cell
                else:
                    if self.nbrs[cell][i] < 0:
                        facet_map[key] = (cell, i)

    def insert(self, p, hint: int = -1) -> int:
        """Insert p, restore the Delaunay property, return its vertex id.

        Points are buffered until four affinely independent ones exist (so
        any insertion order works). A point within 1e-12 of an existing
        vertex is a no-op returning the existing id.
        """
        p = np.asarray(p, dtype=np.float64)
        if not self._seeded:
            for i in range(self.n_verts):
                if np.linalg.norm(self.verts[i] - p) <= _DUP_TOL:
                    return int(i)
            self._grow_verts()
            pid = self.n_verts
            self.verts[pid] = p
            self.n_verts += 1
            self._try_seed()
            return pid

        self._grow_verts()
        return self._insert_located(p, self.n_verts, hint, new_vertex=True)

    def _insert_located(self, p, pid: int, hint: int = -1,
                        new_vertex: bool = False) -> int:
        loc = self.locate(p, hint)
        near, dnear = self._nearest_around(loc, p)
        if new_vertex and dnear <= _DUP_TOL:
            return near
        if new_vertex:
            self.verts[pid] = p
            self.n_verts += 1

        if not self._conflict(loc, p, pid):
            # possible only for exactly degenerate locations; rescan
            loc = self._conflict_scan(p, pid)

        conflict = {loc}
        stack = [loc]
        while stack:
            c = stack.pop()
            for nb in self.nbrs[c]:
                if nb < 0 or nb in conflict:
                    continue
                if self._conflict(nb, p, pid):
                    conflict.add(nb)
                    stack.append(nb)

        new_cells = self._carve(conflict, p, pid)
        self._last_cell = new_cells[0]
        if self._new_cells_hook is not None:
            self._new_cells_hook(new_cells)
        return pid

    def _nearest_around(self, cell: int, p):
        best, best_d = self.nearest_vertex_in_cell(cell, p)
        for nb in self.nbrs[cell]:
            if nb >= 0 and self.alive[nb]:
                v, d = self.nearest_vertex_in_cell(nb, p)
                if d < best_d:
                    best, best_d = v, d
        return best, best_d

    def _conflict_scan(self, p, pid: int) -> int:
        for c in range(self.n_cells):
            if self.alive[c] and self._conflict(c, p, pid):
                return c
        raise ContractViolationError("no conflicting cell for inserted point")

    def _boundary_facets(self, conflict):
        out = []
        for c in conflict:
            for i in range(4):
                nb = self.nbrs[c][i]
                if nb < 0 or nb not in conflict:
                    row = self.cells[c]
                    f = _FACET[i]
                    out.append((row[f[0]], row[f[1]], row[f[2]], nb, c, i))
        return out

    def _carve(self, conflict, p, pid):
        boundary = self._boundary_facets(conflict)
        # a new cell coplanar with p cannot be built; absorb the outer cell
        # and retry (possible only for exactly degenerate inputs)
        for _ in range(64):
            flat = None
            for (f0, f1, f2, nb, _c, _i) in boundary:
                if INF in (f0, f1, f2) or nb < 0:
                    continue
                if self._orient(f0, f2, f1, -1, p) == 0:
                    flat = nb
                    break
            if flat is None:
                break
            conflict.add(flat)
            boundary = self._boundary_facets(conflict)
        else:
            raise ContractViolationError("could not resolve flat cavity facet")

        for c in conflict:
            self._kill_cell(c)

        new_cells = []
        infinite_new = []
        for (f0, f1, f2, nb, _c, _i) in boundary:
            if INF in (int(f0), int(f1), int(f2)):
                cell = self._new_cell(f0, f2, f1, pid)
                infinite_new.append(cell)
            else:
                # orient the finite cell positively using the actual side of p
                s = self._orient_ids(f0, f1, f2, p[0], p[1], p[2])
                if s < 0:
                    cell = self._new_cell(f0, f2, f1, pid)
                else:
                    cell = self._new_cell(f0, f1, f2, pid)
            new_cells.append(cell)
            # outer neighbor sits opposite the new vertex (slot 3)
            self.nbrs[cell][3] = nb
            if nb >= 0:
                row_nb = self.cells[nb]
                for j in range(4):
                    fb = _FACET[j]
                    tri = {int(row_nb[fb[0]]), int(row_nb[fb[1]]), int(row_nb[fb[2]])}
                    if tri == {int(f0), int(f1), int(f2)}:
                        self.nbrs[nb][j] = cell
                        break
        self._wire_new_cells(new_cells)
        for cell in infinite_new:
            self._fix_infinite_orientation(cell)
        return new_cells

    def _fix_infinite_orientation(self, cell: int):
        """Order an infinite cell so its finite facet faces out of the hull.

        The conflict test relies on the drop-INF facet having the hull
        interior on its negative side; check against the apex of the finite
        neighbor across that facet and swap two vertices if needed.
        """
        row = self.cells[cell]
        slot = 0
        while row[slot] != INF:
            slot += 1
        f = _FACET[slot]
        tri = (int(row[f[0]]), int(row[f[1]]), int(row[f[2]]))
        nb = self.nbrs[cell][slot]
        row_nb = self.cells[nb]
        w = next(int(v) for v in row_nb if int(v) not in tri and v != INF)
        s = self._orient(tri[0], tri[1], tri[2], w)
        if s > 0:
            i, j = f[0], f[1]
            self.cells[cell][i], self.cells[cell][j] = (
                self.cells[cell][j], self.cells[cell][i],
            )
            self.nbrs[cell][i], self.nbrs[cell][j] = (
                self.nbrs[cell][j], self.nbrs[cell][i],
            )

    # -- derived geometry -----------------------------------------------------

    def cell_shape(self, c: int):
        """(ok, center, circumradius, min_edge) of a finite cell."""
        row = self.cells[c]
        v = self.verts
        a, b, cc, d = row[0], row[1], row[2], row[3]
        ok, cx, cy, cz, radius, emin = backend.tet_shape(
            v[a, 0], v[a, 1], v[a, 2], v[b, 0], v[b, 1], v[b, 2],
            v[cc, 0], v[cc, 1], v[cc, 2], v[d, 0], v[d, 1], v[d, 2],
        )
        if not ok:
            return 0, None, np.inf, 0.0
        return 1, np.array([cx, cy, cz]), radius, emin

    def circumcenter(self, c: int):
        """Circumcenter and circumradius of a finite cell (float evaluation)."""
        ok, center, radius, _ = self.cell_shape(c)
        if not ok:
            return None, np.inf
        return center, radius

    def cell_radius_edge(self, c: int) -> float:
        ok, _, radius, emin = self.cell_shape(c)
        if not ok or emin <= 0:
            return np.inf
        return radius / emin

    def barycentric(self, cell: int, p):
        """Barycentric coordinates of p in a finite cell."""
        row = self.cells[cell]
        a = self.verts[row[0]]
        m = (self.verts[[row[1], row[2], row[3]]] - a).T
        try:
            w = np.linalg.solve(m, np.asarray(p, dtype=np.float64) - a)
        except np.linalg.LinAlgError:
            raise ContractViolationError("degenerate cell in barycentric eval")
        return np.array([1.0 - w.sum(), w[0], w[1], w[2]])

    # -- validation (test support) ---------------------------------------------

    def check_combinatorics(self) -> None:
        """Assert adjacency is involutive and orientations are positive."""
        for c in range(self.n_cells):
            if not self.alive[c]:
                continue
            row = self.cells[c]
            for i in range(4):
                nb = self.nbrs[c][i]
                if nb < 0:
                    raise ContractViolationError(f"cell {c} facet {i} unpaired")
                back = [j for j in range(4) if self.nbrs[nb][j] == c]
                if len(back) != 1:
                    raise ContractViolationError(
                        f"adjacency not involutive between {c} and {nb}"
                    )
            if not self.is_infinite(c):
                if self._orient(row[0], row[1], row[2], row[3]) <= 0:
                    raise ContractViolationError(f"cell {c} not positively oriented")
