# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled fringe kernels; same contract as the NumPy versions in pure.py."""

from libc.math cimport cos, sin, fabs, M_PI

import numpy as np

cimport numpy as cnp

cnp.import_array()

cdef double SINC_CUTOFF = 1e-6 * M_PI


cdef inline double _sinc(double x) nogil:
    if fabs(x) < SINC_CUTOFF:
        return 1.0 - x * x / 6.0
    return sin(x) / x


cdef inline void _binomial_row(double a, double b, double* row) nogil:
    cdef double a2 = a * a
    cdef double b2 = b * b
    row[0] = a2 * a2
    row[1] = 4.0 * a2 * a * b
    row[2] = 6.0 * a2 * b2
    row[3] = 4.0 * a * b2 * b
    row[4] = b2 * b2


def envelope(f, double f0, double delta):
    """Detuning envelope eta(f) over a frequency grid (kHz)."""
    cdef cnp.ndarray[double, ndim=1] farr = np.ascontiguousarray(f, dtype=np.float64)
    cdef Py_ssize_t n = farr.shape[0]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            out[i] = _sinc(M_PI * (farr[i] - f0) / delta)
    return out


def rabi_components(beta):
    """Populations of all five sublevels after rotating |+2> by each angle."""
    cdef cnp.ndarray[double, ndim=1] barr = np.ascontiguousarray(beta, dtype=np.float64)
    cdef Py_ssize_t n = barr.shape[0]
    cdef cnp.ndarray[double, ndim=2] out = np.empty((n, 5), dtype=np.float64)
    cdef Py_ssize_t i
    cdef double c, s
    with nogil:
        for i in range(n):
            c = cos(0.5 * barr[i])
            s = sin(0.5 * barr[i])
            _binomial_row(c * c, s * s, &out[i, 0])
    return out


def fringe_components(f, double f0, double t_us, double delta, double phi,
                      double phase_sign=1.0):
    """Five-level Ramsey fringe populations over a frequency grid (kHz, us)."""
    cdef cnp.ndarray[double, ndim=1] farr = np.ascontiguousarray(f, dtype=np.float64)
    cdef Py_ssize_t n = farr.shape[0]
    cdef cnp.ndarray[double, ndim=2] out = np.empty((n, 5), dtype=np.float64)
    cdef Py_ssize_t i
    cdef double eta, beta, phase, cb, ch, sh, c2, s2
    with nogil:
        for i in range(n):
            eta = _sinc(M_PI * (farr[i] - f0) / delta)
            beta = 0.5 * M_PI * eta
            phase = 2.0 * M_PI * (farr[i] + phase_sign * f0) * (t_us * 1e-3) + phi
            cb = cos(beta)
            ch = cos(0.5 * phase)
            sh = sin(0.5 * phase)
            c2 = ch * ch
            s2 = sh * sh
            _binomial_row(cb * cb * c2 + s2, (1.0 - cb * cb) * c2, &out[i, 0])
    return out


def phase_components(phase, double eta):
    """Fringe populations versus accumulated phase at a fixed envelope value."""
    cdef cnp.ndarray[double, ndim=1] parr = np.ascontiguousarray(phase, dtype=np.float64)
    cdef Py_ssize_t n = parr.shape[0]
    cdef cnp.ndarray[double, ndim=2] out = np.empty((n, 5), dtype=np.float64)
    cdef Py_ssize_t i
    cdef double beta = 0.5 * M_PI * eta
    cdef double cb = cos(beta)
    cdef double ch, sh, c2, s2
    with nogil:
        for i in range(n):
            ch = cos(0.5 * parr[i])
            sh = sin(0.5 * parr[i])
            c2 = ch * ch
            s2 = sh * sh
            _binomial_row(cb * cb * c2 + s2, (1.0 - cb * cb) * c2, &out[i, 0])
    return out
