"""Signing the implicit function: edge guesses, constrained least squares,
and the signed robust distance.

Each finite edge of the multi-domain gets a sign guess: -1 when it crosses
the inferred surface (the envelope field dips below half the reach along
it), +1 otherwise. The per-vertex signed values minimize the guess
inconsistency plus a data-fitting term pulling the interpolated field to
zero at the input samples, under the constraint that the values sum to the
vertex count (which rules out the trivial zero solution).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .cloud import PointCloud, SpatialIndex, robust_distance
from .delaunay import INF, Triangulation
from .errors import (
    ContractViolationError,
    DomainError,
    NonConvergenceError,
    SearchFailureError,
)
from .multidomain import ENVELOPE, MultiDomain

log = logging.getLogger(__name__)


@dataclass
class EdgeSignGuess:
    edge: tuple
    sign: int


@dataclass
class KktSystem:
    matrix: sp.csr_matrix  # (|V|+1) x (|V|+1) symmetric
    rhs: np.ndarray
    n_vertices: int


@dataclass
class SignedField:
    values: np.ndarray  # d_s at the triangulation vertices
    lagrange: float

    def constraint_residual(self) -> float:
        n = len(self.values)
        return abs(float(self.values.sum()) - n)


def guess_edge_signs(domain: MultiDomain) -> list[EdgeSignGuess]:
    """Per-edge crossing hypotheses on the multi-domain.

    Edges incident to any shell cell are outside or on the boundary of the
    envelope and cannot cross the surface (+1). Edges interior to the
    envelope are probed with the Lipschitz dichotomic search against half
    the reach level.
    """
    tri = domain.tri
    eps = 0.5 * domain.level
    out = []
    n_crossing = 0
    for (u, v) in tri.finite_edges():
        cells = tri.incident_cells_of_edge(u, v)
        inside = all(
            (not tri.is_infinite(c)) and domain.labels.get(c) == ENVELOPE
            for c in cells
        )
        sign = 1
        if inside:
            try:
                crossing = domain.envelope.segment_reaches_sublevel(
                    tri.verts[u], tri.verts[v], eps
                )
            except SearchFailureError:
                crossing = False
            if crossing:
                sign = -1
                n_crossing += 1
        out.append(EdgeSignGuess(edge=(int(u), int(v)), sign=sign))
    log.info("edge signs: %d edges, %d crossing", len(out), n_crossing)
    return out


def locate_barycentric(tri: Triangulation, p, hint: int = -1):
    """Containing finite cell and barycentric coordinates of p."""
    cell = tri.locate(p, hint)
    if tri.is_infinite(cell):
        raise DomainError("point lies outside the triangulated domain")
    return cell, tri.barycentric(cell, p)


def assemble_kkt(tri: Triangulation, guesses, cloud: PointCloud,
                 lam: float = 1.0) -> KktSystem:
    """Build the symmetric KKT system of the constrained signing problem.

    One sign-consistency row per edge, one barycentric data row per input
    point, and a single all-ones constraint row carrying the vertex count.
    """
    n = tri.n_verts
    rows_i: list[int] = []
    rows_j: list[int] = []
    rows_v: list[float] = []
    for r, g in enumerate(guesses):
        u, v = g.edge
        rows_i += (r, r)
        rows_j += (u, v)
        rows_v += (1.0, -float(g.sign))
    s_mat = sp.coo_matrix(
        (rows_v, (rows_i, rows_j)), shape=(len(guesses), n)
    ).tocsr()

    bi: list[int] = []
    bj: list[int] = []
    bv: list[float] = []
    hint = -1
    for t, p in enumerate(cloud.points):
        cell, bary = locate_barycentric(tri, p, hint)
        hint = cell
        row = tri.cells[cell]
        for k in range(4):
            bi.append(t)
            bj.append(int(row[k]))
            bv.append(float(bary[k]))
    b_mat = sp.coo_matrix((bv, (bi, bj)), shape=(len(cloud), n)).tocsr()

    h = 2.0 * (s_mat.T @ s_mat) + 2.0 * lam * (b_mat.T @ b_mat)
    h = h.tocoo()
    ones = np.ones(n)
    ki = np.concatenate([h.row, np.full(n, n), np.arange(n)])
    kj = np.concatenate([h.col, np.arange(n), np.full(n, n)])
    kv = np.concatenate([h.data, ones, ones])
    kkt = sp.coo_matrix((kv, (ki, kj)), shape=(n + 1, n + 1)).tocsr()
    rhs = np.zeros(n + 1)
    rhs[n] = float(n)
    return KktSystem(matrix=kkt, rhs=rhs, n_vertices=n)


def solve_signed_field(system: KktSystem, tol: float = 1e-8,
                       max_iter: int = 20000) -> SignedField:
    """MINRES on the symmetric indefinite KKT matrix with diagonal scaling."""
    a = system.matrix
    rhs = system.rhs
    diag = a.diagonal().copy()
    diag[diag <= 0] = 1.0
    m_inv = sp.diags(1.0 / diag)
    x, info = spla.minres(a, rhs, rtol=tol, maxiter=max_iter, M=m_inv)
    residual = float(np.linalg.norm(a @ x - rhs) / np.linalg.norm(rhs))
    if residual > 10.0 * tol:
        raise NonConvergenceError(
            "signing", f"MINRES stalled (info={info})", residual=residual
        )
    field = SignedField(values=x[:-1], lagrange=float(x[-1]))
    n = system.n_vertices
    if field.constraint_residual() > 1e-6 * n:
        raise NonConvergenceError(
            "signing",
            f"constraint residual {field.constraint_residual():.3g} "
            f"exceeds 1e-6*|V|",
            residual=residual,
        )
    return field


def interpolated_sign(tri: Triangulation, field: SignedField, p,
                      hint: int = -1):
    """Sign of the piecewise-linear field at p, with the located cell."""
    cell, bary = locate_barycentric(tri, p, hint)
    row = tri.cells[cell]
    val = 0.0
    for k in range(4):
        val += bary[k] * field.values[row[k]]
    if val > 0.0:
        return 1.0, cell
    if val < 0.0:
        return -1.0, cell
    return 0.0, cell


def signed_robust_distance(field: SignedField, tri: Triangulation,
                           index: SpatialIndex, k: int, x,
                           hint: int = -1) -> float:
    """Signed robust distance: interpolated sign times the RMS k-NN distance."""
    s, _ = interpolated_sign(tri, field, x, hint)
    return s * robust_distance(index, x, k)


def write_triplets(path, system: KktSystem) -> None:
    """Dump the KKT matrix in ij-value triplet text form."""
    coo = system.matrix.tocoo()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# {coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
        for i, j, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{i} {j} {v!r}\n")
        fh.write(f"# rhs {len(system.rhs)}\n")
        for v in system.rhs:
            fh.write(f"{v!r}\n")
