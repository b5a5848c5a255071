# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled guidance kernel.

Fields are stacked as ``(S, F, N0, N1, N2)`` complex arrays where field 0 is
psi and field ``1 + d`` its derivative along axis ``d``; unused axes have
length one.  See ``_pykernels.guide_velocity`` for the reference semantics.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline void _axis_weights(double x, double lo, double h, long n, int periodic,
                               long* i0, long* i1, double* f, int* g0, int* g1) noexcept nogil:
    cdef double u
    cdef long j
    g0[0] = 0
    g1[0] = 0
    if n == 1:
        i0[0] = 0
        i1[0] = 0
        f[0] = 0.0
        return
    u = (x - lo) / h - 0.5
    j = <long>u
    if u < j:
        j -= 1
    f[0] = u - j
    if periodic:
        i0[0] = ((j % n) + n) % n
        i1[0] = (((j + 1) % n) + n) % n
    else:
        if j < 0:
            i0[0] = 0
            g0[0] = 1
        else:
            i0[0] = j
        if j + 1 > n - 1:
            i1[0] = n - 1
            g1[0] = 1
        else:
            i1[0] = j + 1


def guide_velocity(const double complex[:, :, :, :, ::1] fa,
                   const double complex[:, :, :, :, ::1] fb,
                   double alpha,
                   const double[:, ::1] pos,
                   const unsigned char[::1] active,
                   const double[::1] lo,
                   const double[::1] hi,
                   const double[::1] h,
                   const unsigned char[::1] periodic,
                   const double[::1] vscale,
                   double rho_min,
                   double[:, ::1] out_v,
                   double[::1] out_rho,
                   signed char[::1] out_status):
    cdef Py_ssize_t n = pos.shape[0]
    cdef int D = pos.shape[1]
    cdef int S = fa.shape[0]
    cdef int F = fa.shape[1]
    cdef long npts[3]
    cdef long idx[3][2]
    cdef double frac[3]
    cdef int ghost[3][2]
    cdef int ncorner[3]
    cdef Py_ssize_t p
    cdef int d, s, fld, b0, b1, b2, sgn
    cdef double w, w0, w1, wa = 1.0 - alpha, rho
    cdef double vr[4]
    cdef double vi[4]
    cdef double num[3]
    cdef double complex za, zb
    cdef long k0, k1, k2
    cdef bint outside

    npts[0] = fa.shape[2]
    npts[1] = fa.shape[3]
    npts[2] = fa.shape[4]
    for d in range(3):
        ncorner[d] = 2 if npts[d] > 1 else 1
    with nogil:
        for p in range(n):
            if not active[p]:
                continue
            outside = False
            for d in range(3):
                if d < D:
                    if pos[p, d] < lo[d] or pos[p, d] > hi[d]:
                        outside = True
                    _axis_weights(pos[p, d], lo[d], h[d], npts[d], periodic[d],
                                  &idx[d][0], &idx[d][1], &frac[d], &ghost[d][0], &ghost[d][1])
                else:
                    idx[d][0] = 0
                    idx[d][1] = 0
                    frac[d] = 0.0
                    ghost[d][0] = 0
                    ghost[d][1] = 0
            if outside:
                out_status[p] = 2
                out_rho[p] = 0.0
                for d in range(D):
                    out_v[p, d] = 0.0
                continue
            rho = 0.0
            for d in range(3):
                num[d] = 0.0
            for s in range(S):
                for fld in range(F):
                    vr[fld] = 0.0
                    vi[fld] = 0.0
                for b2 in range(ncorner[2]):
                    k2 = idx[2][b2]
                    w1 = frac[2] if b2 else 1.0 - frac[2]
                    for b1 in range(ncorner[1]):
                        k1 = idx[1][b1]
                        w0 = w1 * (frac[1] if b1 else 1.0 - frac[1])
                        for b0 in range(ncorner[0]):
                            k0 = idx[0][b0]
                            w = w0 * (frac[0] if b0 else 1.0 - frac[0])
                            if w == 0.0:
                                continue
                            for fld in range(F):
                                # odd ghost for psi, even for the derivative normal to the wall
                                sgn = 1
                                if ghost[0][b0] and fld != 1:
                                    sgn = -sgn
                                if ghost[1][b1] and fld != 2:
                                    sgn = -sgn
                                if ghost[2][b2] and fld != 3:
                                    sgn = -sgn
                                # real arithmetic avoids the C99 complex multiply helper
                                za = fa[s, fld, k0, k1, k2]
                                zb = fb[s, fld, k0, k1, k2]
                                vr[fld] += (w * sgn) * (wa * za.real + alpha * zb.real)
                                vi[fld] += (w * sgn) * (wa * za.imag + alpha * zb.imag)
                rho = rho + vr[0] * vr[0] + vi[0] * vi[0]
                for d in range(D):
                    num[d] = num[d] + vr[0] * vi[1 + d] - vi[0] * vr[1 + d]
            out_rho[p] = rho
            if rho < rho_min or rho <= 0.0:
                out_status[p] = 1
                for d in range(D):
                    out_v[p, d] = 0.0
                continue
            out_status[p] = 0
            for d in range(D):
                out_v[p, d] = vscale[d] * num[d] / rho
