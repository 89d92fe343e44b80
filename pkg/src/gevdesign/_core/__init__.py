"""Numerical core: compiled kernels with a numpy fallback.

The compiled extension is preferred when importable; set the environment
variable ``GEVDESIGN_PURE_PYTHON=1`` to force the numpy implementation
(used by the benchmark and the backend-parity tests).
"""

import os

if os.environ.get("GEVDESIGN_PURE_PYTHON"):
    from gevdesign._core import _gevkernels_py as kernels

    BACKEND = "numpy"
else:
    try:
        from gevdesign._core import _gevkernels as kernels  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        from gevdesign._core import _gevkernels_py as kernels  # type: ignore[no-redef]

        BACKEND = "numpy"

__all__ = ["kernels", "BACKEND"]
