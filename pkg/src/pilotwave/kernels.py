"""Kernel dispatch: the compiled extension when importable, NumPy otherwise.

Set ``PILOTWAVE_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os

import numpy as np

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

AVAILABLE = ("python",) if _ckernels is None else ("cython", "python")
BACKEND = "python" if (_ckernels is None or os.environ.get("PILOTWAVE_PURE_PYTHON")) else "cython"


def _impl(backend: str | None):
    name = backend or BACKEND
    if name == "cython":
        if _ckernels is None:
            raise RuntimeError("compiled kernels are not built")
        return _ckernels.guide_velocity
    if name == "python":
        return _pykernels.guide_velocity
    raise ValueError(f"unknown kernel backend {name!r}")


def guide_velocity(fa, fb, alpha, pos, active, lo, hi, h, periodic, vscale, rho_min,
                   out_v, out_rho, out_status, backend: str | None = None):
    """See :func:`pilotwave._pykernels.guide_velocity`."""
    _impl(backend)(fa, fb, float(alpha), np.ascontiguousarray(pos, dtype=np.float64),
                   np.ascontiguousarray(active, dtype=np.uint8), lo, hi, h, periodic,
                   vscale, float(rho_min), out_v, out_rho, out_status)
