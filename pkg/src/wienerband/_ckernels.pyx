# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: Gaussian kernel-matrix builds, the certified
inverse normal CDF, and fused Monte Carlo block loops.

The pure-Python fallbacks in `kernels.py` implement the same draw layout,
so results agree between the two paths up to libm rounding.
"""

import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport erfc, exp, log, sqrt
from numpy.random cimport bitgen_t

cnp.import_array()

cdef double INV_SQRT_2PI = 0.3989422804014326779
cdef double M_SQRT1_2c = 0.7071067811865475244
cdef double TWO_M53 = 1.1102230246251565404e-16  # 2^-53

# Rational seed for the inverse CDF (central and tail forms).  The seed is
# only a starting point: one Newton step on the erfc-based CDF lands at
# ~1e-15, and a bisection fallback guards the (never observed) case where
# the polish fails to converge.
cdef double A0 = -3.969683028665376e+01
cdef double A1 = 2.209460984245205e+02
cdef double A2 = -2.759285104469687e+02
cdef double A3 = 1.383577518672690e+02
cdef double A4 = -3.066479806614716e+01
cdef double A5 = 2.506628277459239e+00
cdef double B0 = -5.447609879822406e+01
cdef double B1 = 1.615858368580409e+02
cdef double B2 = -1.556989798598866e+02
cdef double B3 = 6.680131188771972e+01
cdef double B4 = -1.328068155288572e+01
cdef double C0 = -7.784894002430293e-03
cdef double C1 = -3.223964580411365e-01
cdef double C2 = -2.400758277161838e+00
cdef double C3 = -2.549732539343734e+00
cdef double C4 = 4.374664141464968e+00
cdef double C5 = 2.938163982698783e+00
cdef double D0 = 7.784695709041462e-03
cdef double D1 = 3.224671290700398e-01
cdef double D2 = 2.445134137142996e+00
cdef double D3 = 3.754408661907416e+00
cdef double P_LOW = 0.02425


cdef inline double _cdf(double z) nogil:
    return 0.5 * erfc(-z * M_SQRT1_2c)


cdef inline double _seed_guess(double u) nogil:
    cdef double q, r
    if u < P_LOW:
        q = sqrt(-2.0 * log(u))
        return (((((C0 * q + C1) * q + C2) * q + C3) * q + C4) * q + C5) / \
               ((((D0 * q + D1) * q + D2) * q + D3) * q + 1.0)
    elif u > 1.0 - P_LOW:
        q = sqrt(-2.0 * log(1.0 - u))
        return -(((((C0 * q + C1) * q + C2) * q + C3) * q + C4) * q + C5) / \
                ((((D0 * q + D1) * q + D2) * q + D3) * q + 1.0)
    else:
        q = u - 0.5
        r = q * q
        return (((((A0 * r + A1) * r + A2) * r + A3) * r + A4) * r + A5) * q / \
               (((((B0 * r + B1) * r + B2) * r + B3) * r + B4) * r + 1.0)


cdef inline double _inv_cdf(double u) nogil:
    cdef double z, f, lo, hi, mid
    cdef int i
    z = _seed_guess(u)
    f = _cdf(z)
    z = z - (f - u) / (INV_SQRT_2PI * exp(-0.5 * z * z))
    f = _cdf(z)
    if f - u > 1e-9 or u - f > 1e-9:
        # certified fallback: pure bisection on the CDF
        lo = -9.5
        hi = 9.5
        for i in range(80):
            mid = 0.5 * (lo + hi)
            if _cdf(mid) < u:
                lo = mid
            else:
                hi = mid
        z = 0.5 * (lo + hi)
    return z


cdef inline double _next_uniform(bitgen_t *state) nogil:
    # (k + 0.5) * 2^-53 with k the top 53 bits: strictly inside (0, 1)
    return (<double> (state.next_uint64(state.state) >> 11) + 0.5) * TWO_M53


cdef bitgen_t *_get_state(object bit_generator):
    return <bitgen_t *> PyCapsule_GetPointer(bit_generator.capsule, "BitGenerator")


def inv_norm_cdf(double[::1] u, double[::1] out):
    cdef Py_ssize_t i, n = u.shape[0]
    with nogil:
        for i in range(n):
            out[i] = _inv_cdf(u[i])


def kernel_matrix(double[:, ::1] out, double y0, double hy, double x0,
                  double hx, double inv2dt, double norm):
    """out[j, k] = norm * exp(-(y_j - x_k)^2 * inv2dt) on uniform grids."""
    cdef Py_ssize_t j, k, ny = out.shape[0], nx = out.shape[1]
    cdef double base, d
    with nogil:
        for j in range(ny):
            base = y0 + j * hy - x0
            for k in range(nx):
                d = base - k * hx
                out[j, k] = norm * exp(-d * d * inv2dt)


def mc_rect_count(object bit_generator, Py_ssize_t rows,
                  double[::1] sqrt_dt, double[::1] lo, double[::1] hi):
    """Count sampled coordinate vectors lying inside all intervals.

    Draw layout: row-major, one uniform per (row, dim).  All draws are
    consumed even after a row leaves the rectangle, so the stream position
    is a function of (rows, ndim) alone.
    """
    cdef bitgen_t *state = _get_state(bit_generator)
    cdef Py_ssize_t i, d, ndim = sqrt_dt.shape[0]
    cdef double w, z
    cdef long count = 0
    cdef int ok
    with bit_generator.lock, nogil:
        for i in range(rows):
            w = 0.0
            ok = 1
            for d in range(ndim):
                z = _inv_cdf(_next_uniform(state))
                w += z * sqrt_dt[d]
                if w < lo[d] or w > hi[d]:
                    ok = 0
            count += ok
    return count


def mc_vector_block(object bit_generator, double[:, ::1] out,
                    double[::1] sqrt_dt):
    """Fill rows with cumulative sums of independent normal increments."""
    cdef bitgen_t *state = _get_state(bit_generator)
    cdef Py_ssize_t i, d, rows = out.shape[0], ndim = sqrt_dt.shape[0]
    cdef double w
    with bit_generator.lock, nogil:
        for i in range(rows):
            w = 0.0
            for d in range(ndim):
                w += _inv_cdf(_next_uniform(state)) * sqrt_dt[d]
                out[i, d] = w


def mc_bridge_block(object bit_generator, double[:, ::1] out, int level):
    """Fill rows with dyadic-grid paths built by midpoint refinement.

    Column j holds the value at time (j+1) * 2^-level.  Per row the draws
    go: endpoint at t=1 first, then midpoints stage by stage, left to
    right -- the same layout the numpy fallback uses.
    """
    cdef bitgen_t *state = _get_state(bit_generator)
    cdef Py_ssize_t i, rows = out.shape[0]
    cdef int lev, j, stride, m, n = 1 << level
    cdef double sd, left, right
    with bit_generator.lock, nogil:
        for i in range(rows):
            out[i, n - 1] = _inv_cdf(_next_uniform(state))
            for lev in range(1, level + 1):
                stride = 1 << (level - lev)
                sd = sqrt(2.0 ** (-(lev + 1)))
                for j in range(1 << (lev - 1)):
                    m = (2 * j + 1) * stride - 1
                    left = out[i, 2 * j * stride - 1] if j > 0 else 0.0
                    right = out[i, (2 * j + 2) * stride - 1]
                    out[i, m] = 0.5 * (left + right) + \
                        _inv_cdf(_next_uniform(state)) * sd


def mc_bridge_count(object bit_generator, Py_ssize_t rows, int level,
                    double[::1] lo, double[::1] hi):
    """Bridge-sampled rows counted against per-time interval bounds."""
    cdef bitgen_t *state = _get_state(bit_generator)
    cdef Py_ssize_t i
    cdef int lev, j, stride, m, d, n = 1 << level
    cdef double sd, left, right
    cdef long count = 0
    cdef int ok
    w_buf = np.empty(n, dtype=np.float64)
    cdef double[::1] w = w_buf
    with bit_generator.lock, nogil:
        for i in range(rows):
            w[n - 1] = _inv_cdf(_next_uniform(state))
            for lev in range(1, level + 1):
                stride = 1 << (level - lev)
                sd = sqrt(2.0 ** (-(lev + 1)))
                for j in range(1 << (lev - 1)):
                    m = (2 * j + 1) * stride - 1
                    left = w[2 * j * stride - 1] if j > 0 else 0.0
                    right = w[(2 * j + 2) * stride - 1]
                    w[m] = 0.5 * (left + right) + \
                        _inv_cdf(_next_uniform(state)) * sd
            ok = 1
            for d in range(n):
                if w[d] < lo[d] or w[d] > hi[d]:
                    ok = 0
                    break
            count += ok
    return count
