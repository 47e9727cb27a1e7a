"""Lipschitz-guided recursive dichotomic search along a segment.

Locates the points where a 1-Lipschitz scalar function crosses a small
level ``eps``. The 1-Lipschitz property bounds the function on an interval
by a parallelogram, which lets whole intervals be discarded (pruned) or
shrunk without any dense sampling. Used for antipodal-point finding in the
shape-diameter estimator and for edge sign guessing on the volume mesh.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .errors import ContractViolationError, SearchFailureError

# Absolute tolerance on |f(m) - eps| for accepting a crossing point. Scaled
# up proportionally when the segment is longer than LONG_SEGMENT so the
# criterion stays meaningful at large model scales.
F_TOL = 1e-7
LONG_SEGMENT = 1e3
DEFAULT_MAX_DEPTH = 64


@dataclass
class CrossingSet:
    """Ordered level-crossing parameters found along a segment.

    Crossings come in pairs bracketing each sublevel excursion; a tangential
    graze pushes its midpoint twice so the pairing stays uniform.
    """

    hits: list[float] = field(default_factory=list)
    same_side: list[bool] = field(default_factory=list)

    def push(self, t: float, tangential: bool) -> None:
        self.hits.append(t)
        self.same_side.append(tangential)
        if tangential:
            self.hits.append(t)
            self.same_side.append(tangential)


def _f_tol(a: float, b: float) -> float:
    span = b - a
    if span > LONG_SEGMENT:
        return F_TOL * (span / LONG_SEGMENT)
    return F_TOL


def dichotomic_search(
    f: Callable[[float], float],
    a: float,
    b: float,
    eps: float,
    *,
    max_depth: int = DEFAULT_MAX_DEPTH,
    strict: bool = True,
    on_prune: Optional[Callable[[float, float], None]] = None,
    stop_after: Optional[int] = None,
) -> CrossingSet:
    """Find the eps-level crossings of a 1-Lipschitz ``f`` on ``[a, b]``.

    ``strict`` enforces the 1-Lipschitz consistency check on every visited
    interval; disable it for functions that are only approximately
    1-Lipschitz. ``on_prune`` is a test hook called with every discarded
    interval. ``stop_after`` ends the search early once that many entries
    have been recorded (entries arrive in ascending parameter order).

    Raises :class:`SearchFailureError` when an interval requires more than
    ``max_depth`` bisections, which signals that ``eps`` is too small
    relative to the sampling of ``f``.
    """
    if not b > a:
        raise ContractViolationError(f"empty search interval [{a}, {b}]")
    if eps <= 0:
        raise ContractViolationError("eps must be positive")
    ftol = _f_tol(a, b)
    out = CrossingSet()
    fa = f(a)
    fb = f(b)
    # LIFO stack, right half pushed first, so intervals are visited left to
    # right and hits arrive sorted.
    stack = [(a, b, fa, fb, 0)]
    while stack:
        a0, b0, fa0, fb0, depth = stack.pop()
        if strict and abs(fa0 - fb0) > (b0 - a0) + 1e-9 * (1.0 + abs(fa0) + abs(fb0)):
            raise ContractViolationError(
                f"function is not 1-Lipschitz on [{a0}, {b0}]: "
                f"|{fa0} - {fb0}| > {b0 - a0}"
            )
        # Parallelogram bounds from the Lipschitz cones at both endpoints.
        t_lo = 0.5 * (a0 + b0 - fb0 + fa0)
        y_lo = fa0 - (t_lo - a0)
        t_hi = 0.5 * (a0 + b0 + fb0 - fa0)
        y_hi = fa0 + (t_hi - a0)
        if y_lo >= eps or y_hi <= eps:
            if on_prune is not None:
                on_prune(a0, b0)
            continue
        k_a = -1.0 if fa0 > eps else 1.0
        k_b = 1.0 if fb0 > eps else -1.0
        left = a0 + (eps - fa0) / k_a
        right = b0 + (eps - fb0) / k_b
        mid = 0.5 * (left + right)
        fm = f(mid)
        if abs(fm - eps) <= ftol and (right - left) <= eps:
            # Exact equality with eps counts as the crossing (below) side.
            tangential = (fa0 > eps) == (fb0 > eps)
            out.push(mid, tangential)
            if stop_after is not None and len(out.hits) >= stop_after:
                return out
            continue
        if depth + 1 > max_depth:
            raise SearchFailureError(
                f"dichotomic search exceeded depth {max_depth} on "
                f"[{a0}, {b0}]; eps={eps} is too small for this sampling"
            )
        fl = f(left)
        fr = f(right)
        stack.append((mid, right, fm, fr, depth + 1))
        stack.append((left, mid, fl, fm, depth + 1))
    return out


def crossing_points(hits: CrossingSet) -> list[float]:
    """Collapse paired crossing entries into one estimate per sublevel dip.

    Consecutive entries bracket one excursion of ``f`` below eps; their
    average approximates the point of the dip itself.
    """
    n = len(hits.hits)
    if n % 2 != 0:
        raise ContractViolationError(
            f"crossing container has odd length {n}; endpoints of the search "
            "interval must lie above eps"
        )
    return [
        0.5 * (hits.hits[i] + hits.hits[i + 1]) for i in range(0, n, 2)
    ]


def segment_crosses_sublevel(
    f: Callable[[float], float],
    a: float,
    b: float,
    eps: float,
    *,
    max_depth: int = DEFAULT_MAX_DEPTH,
    strict: bool = True,
) -> bool:
    """True iff ``f`` reaches the eps-sublevel anywhere on ``[a, b]``.

    Endpoints at or below eps count as reaching it; otherwise the first
    accepted crossing point short-circuits the search.
    """
    if f(a) <= eps or f(b) <= eps:
        return True
    found = dichotomic_search(
        f, a, b, eps, max_depth=max_depth, strict=strict, stop_after=1
    )
    return len(found.hits) > 0


def first_sublevel_point(
    f: Callable[[float], float],
    a: float,
    b: float,
    eps: float,
    *,
    max_depth: int = DEFAULT_MAX_DEPTH,
    strict: bool = True,
) -> Optional[float]:
    """Parameter of the first eps-sublevel dip of ``f`` on ``[a, b]``.

    Requires ``f(a) > eps``. If the final dip runs into the end of the
    segment (``f(b) <= eps``) it is closed with ``b`` itself. Returns None
    when the function never reaches the sublevel.
    """
    try:
        found = dichotomic_search(
            f, a, b, eps, max_depth=max_depth, strict=strict, stop_after=2
        )
    except SearchFailureError:
        return None
    hits = found.hits
    if not hits:
        return None
    if len(hits) >= 2:
        return 0.5 * (hits[0] + hits[1])
    if f(b) <= eps:
        return 0.5 * (hits[0] + b)
    return None
