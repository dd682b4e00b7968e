# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see ``_pykernels.py`` for the reference semantics."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, exp, sqrt, fabs

cnp.import_array()

cdef double _INVPHI = (sqrt(5.0) - 1.0) / 2.0
cdef double SINC_SERIES_CUTOFF = 1e-6


cdef inline double _sinc2(double x) nogil:
    cdef double s
    if fabs(x) < SINC_SERIES_CUTOFF:
        return 1.0 - x * x / 3.0
    s = sin(x) / x
    return s * s


cpdef double sinc2(double x):
    return _sinc2(x)


cpdef double phi_from_mismatch(double dk_perp2, double dk_z, double half_length,
                               double pump_waist):
    return exp(-pump_waist * pump_waist * dk_perp2 / 4.0) * _sinc2(dk_z * half_length)


cdef inline double _phi_at(double theta, double kp_eff, double k_fixed, double sin_f,
                           double cos_f, double k_free, double half_length,
                           double pump_waist) nogil:
    cdef double dkx = k_free * sin(theta) - k_fixed * sin_f
    cdef double dkz = kp_eff - k_fixed * cos_f - k_free * cos(theta)
    return exp(-pump_waist * pump_waist * (dkx * dkx) / 4.0) * _sinc2(dkz * half_length)


cdef void _max_phi(double kp_eff, double k_fixed, double theta_fixed, double k_free,
                   double half_length, double pump_waist, double center, double halfwidth,
                   int n_grid, double tol, double* out_phi, double* out_theta) nogil:
    cdef double sin_f = sin(theta_fixed)
    cdef double cos_f = cos(theta_fixed)
    cdef double lo = center - halfwidth
    cdef double step = 2.0 * halfwidth / (n_grid - 1)
    cdef double best = -1.0
    cdef int jbest = 0
    cdef int j
    cdef double v, a, b, x1, x2, f1, f2, theta, val
    for j in range(n_grid):
        v = _phi_at(lo + j * step, kp_eff, k_fixed, sin_f, cos_f, k_free, half_length, pump_waist)
        if v > best:
            best = v
            jbest = j
    a = lo + (jbest - 1 if jbest > 0 else 0) * step
    b = lo + (jbest + 1 if jbest < n_grid - 1 else n_grid - 1) * step
    x1 = b - _INVPHI * (b - a)
    x2 = a + _INVPHI * (b - a)
    f1 = _phi_at(x1, kp_eff, k_fixed, sin_f, cos_f, k_free, half_length, pump_waist)
    f2 = _phi_at(x2, kp_eff, k_fixed, sin_f, cos_f, k_free, half_length, pump_waist)
    while b - a > tol:
        if f1 < f2:
            a = x1
            x1 = x2
            f1 = f2
            x2 = a + _INVPHI * (b - a)
            f2 = _phi_at(x2, kp_eff, k_fixed, sin_f, cos_f, k_free, half_length, pump_waist)
        else:
            b = x2
            x2 = x1
            f2 = f1
            x1 = b - _INVPHI * (b - a)
            f1 = _phi_at(x1, kp_eff, k_fixed, sin_f, cos_f, k_free, half_length, pump_waist)
    if f1 >= f2:
        theta = x1
        val = f1
    else:
        theta = x2
        val = f2
    if best > val:
        out_phi[0] = best
        out_theta[0] = lo + jbest * step
    else:
        out_phi[0] = val
        out_theta[0] = theta


def max_phi_conjugate(double kp_eff, double k_fixed, double theta_fixed, double k_free,
                      double half_length, double pump_waist, double center,
                      double halfwidth, int n_grid=200, double tol=1e-7):
    cdef double phi, theta
    _max_phi(kp_eff, k_fixed, theta_fixed, k_free, half_length, pump_waist,
             center, halfwidth, n_grid, tol, &phi, &theta)
    return phi, theta


def max_phi_conjugate_many(double kp_eff, k_fixed, theta_fixed, k_free,
                           double half_length, double pump_waist, double center,
                           double halfwidth, int n_grid=200, double tol=1e-7):
    cdef double[::1] kf = np.ascontiguousarray(k_fixed, dtype=np.float64)
    cdef double[::1] tf = np.ascontiguousarray(theta_fixed, dtype=np.float64)
    cdef double[::1] kr = np.ascontiguousarray(k_free, dtype=np.float64)
    cdef Py_ssize_t n = kf.shape[0]
    phi_arr = np.empty(n)
    theta_arr = np.empty(n)
    cdef double[::1] phi = phi_arr
    cdef double[::1] theta = theta_arr
    cdef Py_ssize_t m
    with nogil:
        for m in range(n):
            _max_phi(kp_eff, kf[m], tf[m], kr[m], half_length, pump_waist,
                     center, halfwidth, n_grid, tol, &phi[m], &theta[m])
    return phi_arr, theta_arr


def gate_outcomes(u_origin, t_first, u_detect, double p_bg, double chi_d, double gate):
    cdef double[::1] uo = np.ascontiguousarray(u_origin, dtype=np.float64)
    cdef double[::1] tf = np.ascontiguousarray(t_first, dtype=np.float64)
    cdef double[::1] ud = np.ascontiguousarray(u_detect, dtype=np.float64)
    cdef Py_ssize_t n = uo.shape[0]
    cdef Py_ssize_t m
    cdef long n_coinc = 0
    cdef long n_bg = 0
    cdef long n_uncorr = 0
    cdef double half = 0.5 * gate
    cdef double t_fire
    cdef bint correlated
    with nogil:
        for m in range(n):
            t_fire = tf[m]
            correlated = False
            if uo[m] < p_bg:
                n_bg += 1
            elif ud[m] < chi_d and half < t_fire:
                t_fire = half
                correlated = True
            if t_fire <= gate:
                n_coinc += 1
                if not correlated:
                    n_uncorr += 1
    return int(n_coinc), int(n_bg), int(n_uncorr)
