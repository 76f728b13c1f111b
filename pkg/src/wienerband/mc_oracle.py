"""Monte Carlo ground truth for rectangle and band probabilities.

Streams are counter-based: block b of a run draws from Philox keyed by
(seed, tag << 48 | b), with a fixed 32768-row block size and a fixed
row-major draw layout inside each block.  Results are therefore functions
of (seed, samples) alone -- worker counts only change scheduling, never
values.  Normal variates come from the inverse-CDF transform of uniform
draws; the certified normal CDF is the accuracy authority for the inverse
(see `kernels`), so the sampler shares its scalar kernel with the rest of
the package rather than introducing a separate sampling recipe.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from numpy.random import Philox

from . import kernels
from .errors import DomainError, PreconditionError
from .pathsets import BandSet, Rectangle

BLOCK_ROWS = 1 << 15

_TAG_VECTOR = 1
_TAG_BRIDGE = 2
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class McConfig:
    samples: int
    seed: int
    workers: int = 1
    level: int | None = None

    def __post_init__(self):
        if self.samples < 1:
            raise DomainError("samples must be positive")
        if self.workers < 1:
            raise DomainError("workers must be positive")


@dataclass(frozen=True)
class McEstimate:
    p_hat: float
    std_error: float
    samples: int
    seed: int

    def __post_init__(self):
        if not 0.0 <= self.p_hat <= 1.0:
            raise DomainError(f"p_hat {self.p_hat} outside [0, 1]")


def _bit_generator(seed: int, tag: int, block: int) -> Philox:
    key = np.array([seed & _MASK64, (tag << 48) | block], dtype=np.uint64)
    return Philox(key=key)


def _block_sizes(total: int) -> list[int]:
    full, rem = divmod(total, BLOCK_ROWS)
    return [BLOCK_ROWS] * full + ([rem] if rem else [])


def _map_blocks(fn, nblocks: int, workers: int) -> list:
    if workers <= 1 or nblocks <= 1:
        return [fn(b) for b in range(nblocks)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(nblocks)))


def _grid_floats(grid) -> np.ndarray:
    t = np.array([float(x) for x in grid], dtype=np.float64)
    if t.size == 0:
        raise DomainError("empty sampling grid")
    if np.any(t <= 0.0) or np.any(np.diff(t) <= 0.0):
        raise DomainError("sampling grid must be sorted, positive, distinct")
    return t


def sample_vector(grid, count: int, seed: int, workers: int = 1) -> np.ndarray:
    """Sample coordinate vectors at the grid times via independent increments.

    Row r is the cumulative sum of N(0, t_i - t_{i-1}) draws; deterministic
    per (seed, row) and reproducible for any worker count.
    """
    t = _grid_floats(grid)
    sqrt_dt = np.ascontiguousarray(np.sqrt(np.diff(t, prepend=0.0)))
    sizes = _block_sizes(count)

    def one(b):
        return kernels.mc_vector_block(
            _bit_generator(seed, _TAG_VECTOR, b), sizes[b], sqrt_dt)

    return np.vstack(_map_blocks(one, len(sizes), workers))


def estimate_rectangle(rect: Rectangle, cfg: McConfig) -> McEstimate:
    """Fraction of sampled vectors inside all rectangle intervals."""
    if rect.is_empty:
        return McEstimate(0.0, 0.0, cfg.samples, cfg.seed)
    t = _grid_floats(rect.times)
    sqrt_dt = np.ascontiguousarray(np.sqrt(np.diff(t, prepend=0.0)))
    lo = np.ascontiguousarray(rect.los, dtype=np.float64)
    hi = np.ascontiguousarray(rect.his, dtype=np.float64)
    sizes = _block_sizes(cfg.samples)

    def one(b):
        return kernels.mc_rect_count(
            _bit_generator(cfg.seed, _TAG_VECTOR, b), sizes[b], sqrt_dt, lo, hi)

    count = sum(_map_blocks(one, len(sizes), cfg.workers))
    return _estimate(count, cfg)


def estimate_rectangles_union(rects: Sequence[Rectangle], cfg: McConfig) -> McEstimate:
    """Fraction of sampled vectors inside at least one rectangle.

    All rectangles must share one grid; the same sample stream feeds every
    membership test.
    """
    rects = [r for r in rects]
    if not rects:
        raise DomainError("need at least one rectangle")
    times = rects[0].times
    for r in rects[1:]:
        if r.times != times:
            raise PreconditionError("union rectangles must share a grid")
    live = [r for r in rects if not r.is_empty]
    if not live:
        return McEstimate(0.0, 0.0, cfg.samples, cfg.seed)
    t = _grid_floats(times)
    sqrt_dt = np.ascontiguousarray(np.sqrt(np.diff(t, prepend=0.0)))
    los = [np.asarray(r.los) for r in live]
    his = [np.asarray(r.his) for r in live]
    sizes = _block_sizes(cfg.samples)

    def one(b):
        w = kernels.mc_vector_block(
            _bit_generator(cfg.seed, _TAG_VECTOR, b), sizes[b], sqrt_dt)
        inside = np.zeros(w.shape[0], dtype=bool)
        for lo, hi in zip(los, his):
            inside |= ((w >= lo) & (w <= hi)).all(axis=1)
        return int(inside.sum())

    count = sum(_map_blocks(one, len(sizes), cfg.workers))
    return _estimate(count, cfg)


def estimate_rectangle_difference(outer: Rectangle, inner: Rectangle,
                                  cfg: McConfig) -> McEstimate:
    """Fraction of vectors inside the outer rectangle but not the inner one.

    Valid as a set-difference estimate because nested bands project to
    nested rectangles.
    """
    if outer.is_empty:
        return McEstimate(0.0, 0.0, cfg.samples, cfg.seed)
    if inner.is_empty:
        return estimate_rectangle(outer, cfg)
    if outer.times != inner.times:
        raise PreconditionError("difference rectangles must share a grid")
    t = _grid_floats(outer.times)
    sqrt_dt = np.ascontiguousarray(np.sqrt(np.diff(t, prepend=0.0)))
    lo_o, hi_o = np.asarray(outer.los), np.asarray(outer.his)
    lo_i, hi_i = np.asarray(inner.los), np.asarray(inner.his)
    sizes = _block_sizes(cfg.samples)

    def one(b):
        w = kernels.mc_vector_block(
            _bit_generator(cfg.seed, _TAG_VECTOR, b), sizes[b], sqrt_dt)
        in_outer = ((w >= lo_o) & (w <= hi_o)).all(axis=1)
        in_inner = ((w >= lo_i) & (w <= hi_i)).all(axis=1)
        return int((in_outer & ~in_inner).sum())

    count = sum(_map_blocks(one, len(sizes), cfg.workers))
    return _estimate(count, cfg)


def sample_path_bridge(level: int, count: int, seed: int,
                       workers: int = 1) -> np.ndarray:
    """Sample paths on the level grid by bridge midpoint refinement.

    The endpoint W(1) ~ N(0, 1) is drawn first; each refinement stage fills
    midpoints with the conditional law N((W_a + W_b)/2, (b - a)/4).  Column
    j holds the value at time (j+1) * 2^-level.
    """
    if level < 0 or level > 25:
        raise DomainError(f"bridge level {level} out of range")
    sizes = _block_sizes(count)

    def one(b):
        return kernels.mc_bridge_block(
            _bit_generator(seed, _TAG_BRIDGE, b), sizes[b], level)

    return np.vstack(_map_blocks(one, len(sizes), workers))


def estimate_band_bridge(b: BandSet, level: int, cfg: McConfig) -> McEstimate:
    """Bridge-sampled estimate of the band's level-grid rectangle.

    Band breakpoints must live on the level grid (dyadic of level <= level)
    for the rectangle to be the exact projection.
    """
    if b.is_empty:
        return McEstimate(0.0, 0.0, cfg.samples, cfg.seed)
    n = 1 << level
    grid = [Fraction(k, n) for k in range(1, n + 1)]
    gset = set(grid)
    for t in b.breakpoints():
        if t not in gset:
            raise PreconditionError(
                f"band breakpoint {t} is off the level-{level} bridge grid")
    los, his = b.bounds_at(grid)
    lo = np.ascontiguousarray(los, dtype=np.float64)
    hi = np.ascontiguousarray(his, dtype=np.float64)
    sizes = _block_sizes(cfg.samples)

    def one(blk):
        return kernels.mc_bridge_count(
            _bit_generator(cfg.seed, _TAG_BRIDGE, blk), sizes[blk], level, lo, hi)

    count = sum(_map_blocks(one, len(sizes), cfg.workers))
    return _estimate(count, cfg)


def _estimate(count: int, cfg: McConfig) -> McEstimate:
    p = count / cfg.samples
    se = math.sqrt(p * (1.0 - p) / cfg.samples)
    return McEstimate(p, se, cfg.samples, cfg.seed)
