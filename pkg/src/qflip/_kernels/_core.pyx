# cython: language_level=3
"""Compiled propagation kernels.

Semantics mirror ``qflip._kernels._fallback`` exactly; see that module
for the conventions.  The step loops run without the GIL so threaded
sweeps scale.
"""

import numpy as np

from libc.math cimport cos, sin, sqrt

BACKEND_NAME = "compiled"

cdef double complex IM = 1j


def step_unitary(double omega, double delta, double dt):
    """Exact propagator for one constant step, as a (2, 2) complex array."""
    cdef double w = sqrt(omega * omega + delta * delta)
    cdef double phi = 0.5 * w * dt
    cdef double c = cos(phi)
    cdef double s = sin(phi)
    cdef double nx = 0.0
    cdef double nz = 0.0
    if w != 0.0:
        nx = omega / w
        nz = delta / w
    out = np.empty((2, 2), dtype=np.complex128)
    cdef double complex[:, :] o = out
    o[0, 0] = c + IM * s * nz
    o[0, 1] = -IM * s * nx
    o[1, 0] = -IM * s * nx
    o[1, 1] = c - IM * s * nz
    return out


def propagate_unitary(rho, double omega, deltas, durations):
    """Propagate a 2x2 density matrix through a piecewise-constant sequence."""
    cdef double complex[:, :] r = np.ascontiguousarray(rho, dtype=np.complex128)
    cdef double[:] dl = np.ascontiguousarray(deltas, dtype=np.float64)
    cdef double[:] du = np.ascontiguousarray(durations, dtype=np.float64)
    if r.shape[0] != 2 or r.shape[1] != 2:
        raise ValueError("rho must be 2x2")
    if dl.shape[0] != du.shape[0]:
        raise ValueError("deltas and durations must have equal length")
    cdef double complex r00 = r[0, 0], r01 = r[0, 1], r10 = r[1, 0], r11 = r[1, 1]
    cdef double complex u00, u01, u11, a00, a01, a10, a11, c00, c01, c11
    cdef double w, phi, c, s, nx, nz, delta, dt
    cdef Py_ssize_t i, n = dl.shape[0]
    with nogil:
        for i in range(n):
            delta = dl[i]
            dt = du[i]
            w = sqrt(omega * omega + delta * delta)
            phi = 0.5 * w * dt
            c = cos(phi)
            s = sin(phi)
            if w != 0.0:
                nx = omega / w
                nz = delta / w
            else:
                nx = 0.0
                nz = 0.0
            u00 = c + IM * s * nz
            u01 = -IM * s * nx
            u11 = c - IM * s * nz
            # A = U rho (u10 == u01)
            a00 = u00 * r00 + u01 * r10
            a01 = u00 * r01 + u01 * r11
            a10 = u01 * r00 + u11 * r10
            a11 = u01 * r01 + u11 * r11
            # rho' = A U+
            c00 = u00.real - IM * u00.imag
            c01 = u01.real - IM * u01.imag
            c11 = u11.real - IM * u11.imag
            r00 = a00 * c00 + a01 * c01
            r01 = a00 * c01 + a01 * c11
            r10 = a10 * c00 + a11 * c01
            r11 = a10 * c01 + a11 * c11
    out = np.empty((2, 2), dtype=np.complex128)
    cdef double complex[:, :] o = out
    o[0, 0] = r00
    o[0, 1] = r01
    o[1, 0] = r10
    o[1, 1] = r11
    return out


cdef inline void _rhs(double complex r00, double complex r01,
                      double complex r10, double complex r11,
                      double hx, double delta, double gamma,
                      double complex *d00, double complex *d01,
                      double complex *d10, double complex *d11) noexcept nogil:
    d00[0] = -IM * hx * (r10 - r01)
    d01[0] = -IM * (-delta * r01 + hx * (r11 - r00)) - 2.0 * gamma * r01
    d10[0] = -IM * (delta * r10 + hx * (r00 - r11)) - 2.0 * gamma * r10
    d11[0] = -IM * hx * (r01 - r10)


def propagate_lindblad(rho, double omega, deltas, durations,
                       double gamma_phi, int substeps):
    """Propagate through a sequence under pure dephasing (fixed-step RK4)."""
    cdef double complex[:, :] r = np.ascontiguousarray(rho, dtype=np.complex128)
    cdef double[:] dl = np.ascontiguousarray(deltas, dtype=np.float64)
    cdef double[:] du = np.ascontiguousarray(durations, dtype=np.float64)
    if r.shape[0] != 2 or r.shape[1] != 2:
        raise ValueError("rho must be 2x2")
    if dl.shape[0] != du.shape[0]:
        raise ValueError("deltas and durations must have equal length")
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    cdef double complex r00 = r[0, 0], r01 = r[0, 1], r10 = r[1, 0], r11 = r[1, 1]
    cdef double complex k1a, k1b, k1c, k1d
    cdef double complex k2a, k2b, k2c, k2d
    cdef double complex k3a, k3b, k3c, k3d
    cdef double complex k4a, k4b, k4c, k4d
    cdef double h, hx, delta
    cdef Py_ssize_t i, j, n = dl.shape[0]
    hx = 0.5 * omega
    with nogil:
        for i in range(n):
            delta = dl[i]
            h = du[i] / substeps
            for j in range(substeps):
                _rhs(r00, r01, r10, r11, hx, delta, gamma_phi,
                     &k1a, &k1b, &k1c, &k1d)
                _rhs(r00 + 0.5 * h * k1a, r01 + 0.5 * h * k1b,
                     r10 + 0.5 * h * k1c, r11 + 0.5 * h * k1d,
                     hx, delta, gamma_phi, &k2a, &k2b, &k2c, &k2d)
                _rhs(r00 + 0.5 * h * k2a, r01 + 0.5 * h * k2b,
                     r10 + 0.5 * h * k2c, r11 + 0.5 * h * k2d,
                     hx, delta, gamma_phi, &k3a, &k3b, &k3c, &k3d)
                _rhs(r00 + h * k3a, r01 + h * k3b,
                     r10 + h * k3c, r11 + h * k3d,
                     hx, delta, gamma_phi, &k4a, &k4b, &k4c, &k4d)
                r00 = r00 + (h / 6.0) * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
                r01 = r01 + (h / 6.0) * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
                r10 = r10 + (h / 6.0) * (k1c + 2.0 * k2c + 2.0 * k3c + k4c)
                r11 = r11 + (h / 6.0) * (k1d + 2.0 * k2d + 2.0 * k3d + k4d)
    out = np.empty((2, 2), dtype=np.complex128)
    cdef double complex[:, :] o = out
    o[0, 0] = r00
    o[0, 1] = r01
    o[1, 0] = r10
    o[1, 1] = r11
    return out
