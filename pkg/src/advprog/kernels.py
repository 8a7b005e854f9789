"""Projection kernel backend, chosen once at import.

The compiled extension is used when it was built; set
``ADVPROG_PURE_PYTHON=1`` to force the numpy fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py
if os.environ.get("ADVPROG_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"

capped_box = _impl.capped_box
simplex_rows = _impl.simplex_rows
max_bisection_steps = _kernels_py.max_bisection_steps
FTOL = _kernels_py.FTOL
XTOL = _kernels_py.XTOL


def backends():
    """Every importable backend module keyed by name (for tests/benchmarks)."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels as compiled
    except ImportError:
        return out
    out["cython"] = compiled
    return out
