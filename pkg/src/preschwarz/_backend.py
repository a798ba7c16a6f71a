"""Select the compiled kernels when available, else the numpy fallback.

Set ``PRESCHWARZ_PURE=1`` to force the fallback (used by the benchmark and
by the backend-parity tests).
"""

import os

from . import _kernels_py

BACKEND = "python"
series_mul = _kernels_py.series_mul
series_mul_slice = _kernels_py.series_mul_slice

if os.environ.get("PRESCHWARZ_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels
    except ImportError:  # extension not built
        pass
    else:
        BACKEND = "cython"
        series_mul = _kernels.series_mul
        series_mul_slice = _kernels.series_mul_slice
