"""Select the compiled kernels when importable, else the pure-Python ones."""

import os

BACKEND = "python"

if os.environ.get("CHITI_PURE_PYTHON", "") not in ("", "0"):
    from ._kernels_py import rk4_sweep, smallest_eigenvalue, sturm_count
else:
    try:
        from ._kernels import rk4_sweep, smallest_eigenvalue, sturm_count

        BACKEND = "cython"
    except ImportError:  # extension not built
        from ._kernels_py import rk4_sweep, smallest_eigenvalue, sturm_count

__all__ = ["BACKEND", "rk4_sweep", "smallest_eigenvalue", "sturm_count"]
