"""Kernel backend selection.

The compiled extension is used when it imports; otherwise, or when
``REDCAP_DIM_PURE_PYTHON`` is set to a non-empty value, the pure-Python
kernels are used. Both produce identical results.
"""

import os

from . import _kernels_py

if os.environ.get("REDCAP_DIM_PURE_PYTHON"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = "python" if _impl is _kernels_py else "cython"

max_free_run = _impl.max_free_run
simulate_cell = _impl.simulate_cell
RR = _kernels_py.RR
PF = _kernels_py.PF


def compiled():
    """The compiled module, or ``None`` when it is not built."""
    try:
        from . import _kernels
    except ImportError:
        return None
    return _kernels
