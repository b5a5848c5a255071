"""Pure-NumPy guidance kernel, the fallback for (and reference of) ``_ckernels``."""
from __future__ import annotations

import numpy as np


def _axis_weights(x, lo, h, n, periodic):
    if n == 1:
        z = np.zeros(x.shape, dtype=np.intp)
        return z, z, np.zeros(x.shape), np.zeros(x.shape, bool), np.zeros(x.shape, bool)
    u = (x - lo) / h - 0.5
    j = np.floor(u).astype(np.intp)
    f = u - j
    if periodic:
        return j % n, (j + 1) % n, f, np.zeros(x.shape, bool), np.zeros(x.shape, bool)
    g0 = j < 0
    g1 = j + 1 > n - 1
    return np.where(g0, 0, j), np.where(g1, n - 1, j + 1), f, g0, g1


def guide_velocity(fa, fb, alpha, pos, active, lo, hi, h, periodic, vscale, rho_min,
                   out_v, out_rho, out_status):
    """Interpolate psi and grad psi at ``pos`` and form the guidance velocity.

    ``fa``/``fb`` are consecutive frames of stacked fields ``(S, F, N0, N1, N2)``
    mixed as ``(1 - alpha) fa + alpha fb``.  Multilinear interpolation uses
    cell-centred samples; on non-periodic axes the missing neighbour next to
    a wall is the odd reflection of the boundary sample (even for the
    derivative along that axis).  Results are written to ``out_v``,
    ``out_rho`` and ``out_status`` (0 ok, 1 below ``rho_min``, 2 outside)
    for every ``active`` row; other rows are left untouched.
    """
    sel = np.flatnonzero(active)
    if sel.size == 0:
        return
    q = pos[sel]
    D = q.shape[1]
    outside = np.any((q < lo[:D]) | (q > hi[:D]), axis=1)
    q = np.where(outside[:, None], lo[:D], q)
    vals = interpolate(fa, fb, alpha, q, lo, h, periodic)

    psi = vals[:, 0]
    rho = np.sum(psi.real ** 2 + psi.imag ** 2, axis=0)
    num = np.sum(np.conj(psi)[:, None, :] * vals[:, 1:1 + D], axis=0)
    status = np.where(outside, 2, np.where((rho < rho_min) | (rho <= 0.0), 1, 0))
    with np.errstate(divide="ignore", invalid="ignore"):
        v = (vscale[:D, None] * num.imag / rho).T
    v[status != 0] = 0.0
    rho = np.where(outside, 0.0, rho)
    out_v[sel] = v
    out_rho[sel] = rho
    out_status[sel] = status


def interpolate(fa, fb, alpha, q, lo, h, periodic):
    """Multilinear interpolation of all stacked fields at in-domain points ``q``.

    Returns an array of shape ``(S, F, n)``.
    """
    D = q.shape[1]
    S, F = fa.shape[0], fa.shape[1]
    npts = fa.shape[2:]
    n = q.shape[0]
    idx, frac, ghost = [], [], []
    for d in range(3):
        if d < D:
            i0, i1, f, g0, g1 = _axis_weights(q[:, d], lo[d], h[d], npts[d], periodic[d])
        else:
            i0 = i1 = np.zeros(n, dtype=np.intp)
            f = np.zeros(n)
            g0 = g1 = np.zeros(n, bool)
        idx.append((i0, i1))
        frac.append(f)
        ghost.append((g0, g1))

    vals = np.zeros((S, F, n), dtype=np.complex128)
    for c in range(8):
        bits = (c & 1, (c >> 1) & 1, (c >> 2) & 1)
        w = np.ones(n)
        for d in range(3):
            w = w * (frac[d] if bits[d] else 1.0 - frac[d])
        k = tuple(idx[d][bits[d]] for d in range(3))
        corner = (1.0 - alpha) * fa[:, :, k[0], k[1], k[2]] + alpha * fb[:, :, k[0], k[1], k[2]]
        sign = np.ones((F, n))
        for d in range(3):
            g = ghost[d][bits[d]]
            for fld in range(F):
                if fld != 1 + d:
                    sign[fld] = np.where(g, -sign[fld], sign[fld])
        vals += (w * sign)[None] * corner
    return vals
