# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled decay-amplitude kernel (see ``_pykernel`` for the reference)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, M_PI

from .errors import SingularDenominator

cnp.import_array()


cdef inline double cabs2(double complex z) nogil:
    return z.real * z.real + z.imag * z.imag


cdef Py_ssize_t _fill(const double[::1] energy, const double[::1] eps,
                      const double[::1] pars, double floor,
                      double complex[::1] out) nogil:
    cdef double g1 = pars[0], g2 = pars[1], s1 = pars[2], s2 = pars[3]
    cdef double q1 = pars[4], q2 = pars[5], d1 = pars[6], d2 = pars[7]
    cdef double two_pi = 2.0 * M_PI
    cdef double l1 = sqrt(g1 / two_pi), l2 = sqrt(g2 / two_pi)
    cdef double w1 = sqrt(two_pi * s1), w2 = sqrt(two_pi * s2)
    cdef double root = sqrt(g1 * g2)
    cdef double complex I = 1j
    cdef double complex qm1 = q1 - I, qm2 = q2 - I
    cdef double complex e1 = qm1 * qm1 * g1, e2 = qm2 * qm2 * g2
    cdef double complex c12 = qm1 * qm2 * root
    cdef double complex k12 = -0.5 * I * (root + sqrt(s1 * s2))
    cdef double complex w1c = 0.5 * I * (g1 + s1), w2c = 0.5 * I * (g2 + s2)
    cdef double complex z, inv2z, xi1, xi2, q12, det, r1, r2, a1, a2
    cdef double adet2, floor2 = floor * floor
    cdef Py_ssize_t i, n = energy.shape[0]
    for i in range(n):
        z = eps[i] + I
        inv2z = 1.0 / (2.0 * z)
        r1 = l1 * (eps[i] + q1) / z
        r2 = l2 * (eps[i] + q2) / z
        xi1 = energy[i] + d1 + w1c - e1 * inv2z
        xi2 = energy[i] + d2 + w2c - e2 * inv2z
        q12 = k12 + c12 * inv2z
        det = xi1 * xi2 - q12 * q12
        adet2 = cabs2(det)
        if adet2 < floor2 * cabs2(xi2) or adet2 < floor2 * cabs2(xi1):
            return i
        a1 = (xi2 * r1 + q12 * r2) / det
        a2 = (xi1 * r2 + q12 * r1) / det
        out[i] = -I * (w1 * a1 + w2 * a2)
    return -1


def decay_amplitude(energy, eps, pars, double floor):
    e = np.ascontiguousarray(energy, dtype=np.float64)
    x = np.ascontiguousarray(eps, dtype=np.float64)
    shape = np.broadcast(e, x).shape
    e = np.ascontiguousarray(np.broadcast_to(e, shape)).ravel()
    x = np.ascontiguousarray(np.broadcast_to(x, shape)).ravel()
    p = np.ascontiguousarray(pars, dtype=np.float64)
    out = np.empty(e.shape[0], dtype=np.complex128)
    cdef Py_ssize_t bad
    cdef const double[::1] ev = e
    cdef const double[::1] xv = x
    cdef const double[::1] pv = p
    cdef double complex[::1] ov = out
    with nogil:
        bad = _fill(ev, xv, pv, floor, ov)
    if bad >= 0:
        raise SingularDenominator(f"|D_n| below {floor:g} at flat index {bad}")
    return out.reshape(shape)


def decay_probability(energy, eps, pars, double floor):
    s = decay_amplitude(energy, eps, pars, floor)
    return s.real ** 2 + s.imag ** 2
