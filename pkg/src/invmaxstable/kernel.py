"""Backend selection for the conditional-inversion kernel.

The compiled extension is used when it imports and the family has a
closed-form kernel code; otherwise the numpy fallback runs. Setting
``INVMAXSTABLE_PURE_PYTHON=1`` forces the fallback.
"""
from __future__ import annotations

import os

import numpy as np

from . import _kernel_py

try:
    if os.environ.get("INVMAXSTABLE_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-Python backend forced")
    from . import _ckernel
except ImportError:
    _ckernel = None

BACKEND = "cython" if _ckernel is not None else "python"

TOLERANCE = 1e-10
Y_MIN = 1e-12


def available_backends():
    return ["python"] + (["cython"] if _ckernel is not None else [])


def backend_for(fam, backend=None) -> str:
    """Backend that will run for ``fam``; ``backend`` may request one."""
    if backend not in (None, "python", "cython"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "python":
        return "python"
    compiled_ok = _ckernel is not None and getattr(fam, "kernel_code", 0) > 0
    if backend == "cython" and not compiled_ok:
        raise RuntimeError("compiled kernel unavailable for this family or build")
    return "cython" if compiled_ok else "python"


def solve_conditional(fam, x, log_u, backend=None):
    """Y draws solving log Pr(Y > y | X = x) = log_u.

    Returns:
        tuple: ``(y, failures, backend_used)``.
    """
    x = np.ascontiguousarray(x, dtype=float)
    log_u = np.ascontiguousarray(log_u, dtype=float)
    used = backend_for(fam, backend)
    if used == "cython":
        out = np.empty_like(x)
        params = np.ascontiguousarray(fam.kernel_params, dtype=float)
        failures = _ckernel.solve(fam.kernel_code, params, x, log_u, out,
                                  TOLERANCE, Y_MIN)
        return out, int(failures), used
    y, failures = _kernel_py.solve(fam, x, log_u, TOLERANCE, Y_MIN)
    return y, failures, used


def compiled_log_cond_survivor(fam, y, x):
    """Compiled evaluation of log Pr(Y > y | X = x); for cross-checks."""
    if _ckernel is None or fam.kernel_code == 0:
        raise RuntimeError("compiled kernel unavailable")
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    x = np.ascontiguousarray(x.ravel())
    y = np.ascontiguousarray(y.ravel())
    out = np.empty_like(x)
    _ckernel.log_cond_survivor(fam.kernel_code,
                               np.ascontiguousarray(fam.kernel_params, dtype=float),
                               x, y, out)
    return out
