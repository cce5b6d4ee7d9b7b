"""Kernel selection: compiled extension when available, pure Python otherwise.

Set HOLOFLOW_PURE=1 in the environment to force the pure-Python kernels
(useful for debugging and for the benchmark baseline).
"""

import os

_force_pure = os.environ.get("HOLOFLOW_PURE", "").strip() not in ("", "0")

if _force_pure:
    from . import _pure as _impl

    IMPLEMENTATION = "pure"
else:
    try:
        from . import _speedups as _impl

        IMPLEMENTATION = "compiled"
    except ImportError:
        from . import _pure as _impl

        IMPLEMENTATION = "pure"

reorder_sign = _impl.reorder_sign
wedge_ss = _impl.wedge_ss
wedge_mm = _impl.wedge_mm
wedge_sm = _impl.wedge_sm
wedge_ms = _impl.wedge_ms
interior_scalar = _impl.interior_scalar
interior_matrix = _impl.interior_matrix
hodge_scalar = _impl.hodge_scalar
hodge_matrix = _impl.hodge_matrix
canonicalize_scalar = _impl.canonicalize_scalar
canonicalize_matrix = _impl.canonicalize_matrix


def active_implementation():
    """Name of the kernel implementation selected at import time."""
    return IMPLEMENTATION
