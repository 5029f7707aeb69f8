"""Kernel backend selection.

Imports the compiled extension when available, otherwise the pure-Python
fallback. MDRQ_BACKEND=py forces the fallback (MDRQ_BACKEND=compiled raises
if the extension is missing). Both backends export the same functions with
identical semantics; `benchmarks/kernel_backends.py` compares their speed.
"""

from __future__ import annotations

import os
import warnings

from . import _kernels_py

_requested = os.environ.get("MDRQ_BACKEND", "").strip().lower()

if _requested in ("py", "python"):
    _impl = _kernels_py
elif _requested in ("cy", "c", "compiled", "ext"):
    from . import _kernels_cy as _impl  # type: ignore[no-redef]
else:
    try:
        from . import _kernels_cy as _impl  # type: ignore[no-redef]
    except ImportError:  # pragma: no cover - depends on build environment
        warnings.warn(
            "mdrq compiled kernels unavailable; falling back to the slow "
            "pure-Python backend",
            RuntimeWarning,
            stacklevel=2,
        )
        _impl = _kernels_py

BACKEND: str = _impl.BACKEND
MODE_SCALAR: int = _impl.MODE_SCALAR
MODE_BLOCKED: int = _impl.MODE_BLOCKED
LANE: int = _impl.LANE

match_row = _impl.match_row
scan_rows = _impl.scan_rows
scan_column = _impl.scan_column
kd_build = _impl.kd_build
kd_search = _impl.kd_search
mbr_intersect = _impl.mbr_intersect
area_enlargements = _impl.area_enlargements
leaf_overlap_enlargements = _impl.leaf_overlap_enlargements
