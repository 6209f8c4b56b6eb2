"""Fixed-point solver kernel with compiled/pure backend selection.

The Cython extension is used when it was built; set RFSETSIM_PURE=1 to force
the pure-Python fallback (the benchmark script uses this to compare the two).
"""

import os

from . import _fixedpoint_py

if os.environ.get("RFSETSIM_PURE"):
    solve_operating_point = _fixedpoint_py.solve_operating_point
    BACKEND = "python"
else:
    try:
        from ._fixedpoint import solve_operating_point

        BACKEND = "cython"
    except ImportError:
        solve_operating_point = _fixedpoint_py.solve_operating_point
        BACKEND = "python"

__all__ = ["solve_operating_point", "BACKEND"]
