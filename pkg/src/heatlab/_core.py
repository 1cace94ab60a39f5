"""Backend selection for the series kernels.

The compiled extension is used when it imports; ``HEATLAB_BACKEND=python``
forces the pure-Python fallback.
"""

import os

from . import _core_py

BACKEND = "python"
_impl = _core_py

if os.environ.get("HEATLAB_BACKEND", "").lower() != "python":
    try:
        from . import _core_ext as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:
        _impl = _core_py

EPS = _core_py.EPS
bessel_i_series = _impl.bessel_i_series
gegenbauer = _impl.gegenbauer
gegenbauer_sum = _impl.gegenbauer_sum
