"""Gradients of grid fields.

Periodic fields are differentiated spectrally; either boundary can also use
fourth-order central differences.  For ``dirichlet_zero`` the field is
extended by odd reflection about the walls, which sit half a cell outside
the first and last sample points.
"""
from __future__ import annotations

import numpy as np
import scipy.fft as sfft

from .grid import Grid

PERIODIC = "periodic"
DIRICHLET = "dirichlet_zero"
BOUNDARIES = (PERIODIC, DIRICHLET)


def _ik(grid: Grid, d: int) -> np.ndarray:
    k = grid.wavenumbers(d)
    n = grid.points[d]
    if n % 2 == 0:
        # the Nyquist mode has no odd-symmetric derivative
        k[n // 2] = 0.0
    return 1j * k


def spectral_derivative(f: np.ndarray, grid: Grid, d: int, axis: int) -> np.ndarray:
    ik = _ik(grid, d)
    shape = [1] * f.ndim
    shape[axis] = ik.size
    return sfft.ifft(sfft.fft(f, axis=axis) * ik.reshape(shape), axis=axis)


def _pad_axis(f: np.ndarray, axis: int, boundary: str, width: int = 2) -> np.ndarray:
    if boundary == PERIODIC:
        return np.pad(f, _pad_spec(f.ndim, axis, width), mode="wrap")
    # odd reflection: ghost[-1-j] = -f[j]
    lo = -np.flip(np.take(f, np.arange(width), axis=axis), axis=axis)
    n = f.shape[axis]
    hi = -np.flip(np.take(f, np.arange(n - width, n), axis=axis), axis=axis)
    return np.concatenate([lo, f, hi], axis=axis)


def _pad_spec(ndim: int, axis: int, width: int):
    widths = [(0, 0)] * ndim
    widths[axis] = (width, width)
    return widths


def fd4_derivative(f: np.ndarray, grid: Grid, d: int, axis: int, boundary: str) -> np.ndarray:
    g = _pad_axis(f, axis, boundary)
    n = f.shape[axis]

    def s(offset):
        return np.take(g, np.arange(2 + offset, 2 + offset + n), axis=axis)

    return (-s(2) + 8 * s(1) - 8 * s(-1) + s(-2)) / (12 * grid.spacing[d])


def gradient(amplitudes: np.ndarray, grid: Grid, boundary: str = PERIODIC,
             method: str | None = None) -> np.ndarray:
    """Gradient of ``amplitudes`` (shape ``(S, *grid.shape)``).

    Returns an array of shape ``(S, D, *grid.shape)``.  ``method`` is
    ``"spectral"`` or ``"fd4"``; by default spectral for periodic boundaries
    and fd4 otherwise.
    """
    if boundary not in BOUNDARIES:
        raise ValueError(f"unknown boundary {boundary!r}")
    if method is None:
        method = "spectral" if boundary == PERIODIC else "fd4"
    if method == "spectral" and boundary != PERIODIC:
        raise ValueError("spectral differentiation needs a periodic boundary")
    out = np.empty((amplitudes.shape[0], grid.dims) + grid.shape, dtype=np.complex128)
    for d in range(grid.dims):
        if method == "spectral":
            out[:, d] = spectral_derivative(amplitudes, grid, d, axis=d + 1)
        elif method == "fd4":
            out[:, d] = fd4_derivative(amplitudes, grid, d, axis=d + 1, boundary=boundary)
        else:
            raise ValueError(f"unknown differentiation method {method!r}")
    return out


def divergence(vec: np.ndarray, grid: Grid, boundary: str = PERIODIC,
               method: str | None = None) -> np.ndarray:
    """Divergence of a real vector field of shape ``(D, *grid.shape)``.

    Under odd reflection of psi the current is odd as well, so the same
    ghost extension applies at Dirichlet walls.
    """
    if method is None:
        method = "spectral" if boundary == PERIODIC else "fd4"
    total = np.zeros(grid.shape)
    for d in range(grid.dims):
        if method == "spectral":
            total += spectral_derivative(vec[d], grid, d, axis=d).real
        else:
            total += fd4_derivative(vec[d], grid, d, axis=d, boundary=boundary)
    return total
