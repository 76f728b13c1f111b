"""Hot-kernel dispatch: compiled extension when available, numpy fallback
otherwise.

Both paths implement the same operations with the same deterministic draw
layout (uniforms indexed row-major per block), so swapping paths changes
results only at the level of libm rounding.  Selection happens once at
import; set WIENERBAND_PURE_PYTHON=1 to force the fallback, e.g. for the
benchmark in `benchmarks/bench_kernels.py`.
"""

from __future__ import annotations

import math
import os

import numpy as np
from scipy.special import erfc as _erfc

try:
    from . import _ckernels
except ImportError:  # pragma: no cover - build-environment dependent
    _ckernels = None

HAVE_COMPILED = _ckernels is not None
USING_COMPILED = HAVE_COMPILED and not os.environ.get("WIENERBAND_PURE_PYTHON")

_INV_SQRT_2PI = 0.3989422804014326779
_SQRT1_2 = 0.7071067811865475244
_TWO_M53 = 2.0 ** -53

# Rational inverse-CDF seed, shared with the compiled path.
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def _cdf(z):
    return 0.5 * _erfc(-z * _SQRT1_2)


def _seed_guess_numpy(u):
    z = np.empty_like(u)
    lo = u < _P_LOW
    hi = u > 1.0 - _P_LOW
    mid = ~(lo | hi)
    if np.any(lo):
        q = np.sqrt(-2.0 * np.log(u[lo]))
        z[lo] = (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
                ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    if np.any(hi):
        q = np.sqrt(-2.0 * np.log(1.0 - u[hi]))
        z[hi] = -(((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
                 ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    if np.any(mid):
        q = u[mid] - 0.5
        r = q * q
        z[mid] = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / \
                 (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)
    return z


def inv_norm_cdf_numpy(u: np.ndarray) -> np.ndarray:
    """Vectorized inverse normal CDF: rational seed + certified Newton polish."""
    u = np.ascontiguousarray(u, dtype=np.float64)
    z = _seed_guess_numpy(u)
    z = z - (_cdf(z) - u) / (_INV_SQRT_2PI * np.exp(-0.5 * z * z))
    bad = np.abs(_cdf(z) - u) > 1e-9
    if np.any(bad):  # pragma: no cover - safeguard, not reached in practice
        zl = np.full(bad.sum(), -9.5)
        zh = np.full(bad.sum(), 9.5)
        ub = u[bad]
        for _ in range(80):
            zm = 0.5 * (zl + zh)
            below = _cdf(zm) < ub
            zl = np.where(below, zm, zl)
            zh = np.where(below, zh, zm)
        z[bad] = 0.5 * (zl + zh)
    return z


if HAVE_COMPILED:
    def inv_norm_cdf_compiled(u: np.ndarray) -> np.ndarray:
        u = np.ascontiguousarray(u, dtype=np.float64)
        out = np.empty_like(u)
        _ckernels.inv_norm_cdf(u, out)
        return out
else:
    inv_norm_cdf_compiled = None


def gauss_kernel_matrix_numpy(y0, hy, ny, x0, hx, nx, dt) -> np.ndarray:
    out = np.empty((ny, nx), dtype=np.float64)
    y = y0 + hy * np.arange(ny)
    x = x0 + hx * np.arange(nx)
    np.subtract(y[:, None], x[None, :], out=out)
    np.multiply(out, out, out=out)
    np.multiply(out, -0.5 / dt, out=out)
    np.exp(out, out=out)
    out *= _INV_SQRT_2PI / math.sqrt(dt)
    return out


if HAVE_COMPILED:
    def gauss_kernel_matrix_compiled(y0, hy, ny, x0, hx, nx, dt) -> np.ndarray:
        out = np.empty((ny, nx), dtype=np.float64)
        _ckernels.kernel_matrix(out, y0, hy, x0, hx, 0.5 / dt,
                                _INV_SQRT_2PI / math.sqrt(dt))
        return out
else:
    gauss_kernel_matrix_compiled = None


def _uniform_block_numpy(bit_generator, count: int) -> np.ndarray:
    raw = bit_generator.random_raw(count)
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_M53


def mc_rect_count_numpy(bit_generator, rows, sqrt_dt, lo, hi) -> int:
    ndim = sqrt_dt.shape[0]
    u = _uniform_block_numpy(bit_generator, rows * ndim).reshape(rows, ndim)
    w = np.cumsum(inv_norm_cdf_numpy(u.ravel()).reshape(rows, ndim) * sqrt_dt,
                  axis=1)
    inside = ((w >= lo) & (w <= hi)).all(axis=1)
    return int(inside.sum())


def mc_vector_block_numpy(bit_generator, rows, sqrt_dt) -> np.ndarray:
    ndim = sqrt_dt.shape[0]
    u = _uniform_block_numpy(bit_generator, rows * ndim).reshape(rows, ndim)
    return np.cumsum(inv_norm_cdf_numpy(u.ravel()).reshape(rows, ndim) * sqrt_dt,
                     axis=1)


def _bridge_from_draws(z: np.ndarray, level: int) -> np.ndarray:
    """Assemble bridge paths from a (rows, 2^level) draw matrix.

    Column 0 of `z` is the endpoint draw, then stage `lev` consumes columns
    [2^(lev-1), 2^lev) for midpoints left to right -- same layout as the
    compiled row loop.
    """
    rows, n = z.shape
    w = np.empty((rows, n), dtype=np.float64)
    w[:, n - 1] = z[:, 0]
    for lev in range(1, level + 1):
        stride = 1 << (level - lev)
        half = 1 << (lev - 1)
        sd = math.sqrt(2.0 ** (-(lev + 1)))
        j = np.arange(half)
        new = (2 * j + 1) * stride - 1
        right = w[:, (2 * j + 2) * stride - 1]
        left = np.zeros((rows, half))
        if half > 1:
            left[:, 1:] = w[:, 2 * j[1:] * stride - 1]
        w[:, new] = 0.5 * (left + right) + z[:, half:2 * half] * sd
    return w


def mc_bridge_block_numpy(bit_generator, rows, level) -> np.ndarray:
    n = 1 << level
    u = _uniform_block_numpy(bit_generator, rows * n).reshape(rows, n)
    z = inv_norm_cdf_numpy(u.ravel()).reshape(rows, n)
    return _bridge_from_draws(z, level)


def mc_bridge_count_numpy(bit_generator, rows, level, lo, hi) -> int:
    w = mc_bridge_block_numpy(bit_generator, rows, level)
    inside = ((w >= lo) & (w <= hi)).all(axis=1)
    return int(inside.sum())


if USING_COMPILED:
    inv_norm_cdf = inv_norm_cdf_compiled
    # numpy's SIMD exp keeps the buffered broadcast competitive; the
    # benchmark picks the winner per machine, the compiled build is the
    # default because it avoids the intermediate passes.
    gauss_kernel_matrix = gauss_kernel_matrix_compiled

    def mc_rect_count(bit_generator, rows, sqrt_dt, lo, hi) -> int:
        return int(_ckernels.mc_rect_count(bit_generator, rows, sqrt_dt, lo, hi))

    def mc_vector_block(bit_generator, rows, sqrt_dt) -> np.ndarray:
        out = np.empty((rows, sqrt_dt.shape[0]), dtype=np.float64)
        _ckernels.mc_vector_block(bit_generator, out, sqrt_dt)
        return out

    def mc_bridge_block(bit_generator, rows, level) -> np.ndarray:
        out = np.empty((rows, 1 << level), dtype=np.float64)
        _ckernels.mc_bridge_block(bit_generator, out, level)
        return out

    def mc_bridge_count(bit_generator, rows, level, lo, hi) -> int:
        return int(_ckernels.mc_bridge_count(bit_generator, rows, level, lo, hi))
else:
    inv_norm_cdf = inv_norm_cdf_numpy
    gauss_kernel_matrix = gauss_kernel_matrix_numpy
    mc_rect_count = mc_rect_count_numpy
    mc_vector_block = mc_vector_block_numpy
    mc_bridge_block = mc_bridge_block_numpy
    mc_bridge_count = mc_bridge_count_numpy
