"""Kernel backend selection.

The hot kernels (k-NN queries, ray searches, envelope evaluation, predicate
filters) exist twice: a Cython extension (``_kernels``) and a pure
numpy/scipy twin (``_pure``). The compiled one is picked when importable;
set ``LFSMESH_FORCE_PURE=1`` to force the fallback (used by the benchmark
and the cross-backend equivalence tests). Both produce identical results.
"""

import os

if os.environ.get("LFSMESH_FORCE_PURE", "") == "1":
    from . import _pure as _impl
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _pure as _impl

COMPILED = bool(getattr(_impl, "COMPILED", False))

KdTree = _impl.KdTree
EnvelopeField = _impl.EnvelopeField
ray_first_hit = _impl.ray_first_hit
orient3d_filtered = _impl.orient3d_filtered
insphere_filtered = _impl.insphere_filtered
tet_shape = _impl.tet_shape


def backend_name() -> str:
    return "compiled" if COMPILED else "pure"
