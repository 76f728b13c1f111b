"""Dyadic time grids on (0, 1].

The dense time set is realized as dyadic rationals: level L holds the
2^L times k * 2^-L for k = 1..2^L.  Levels are nested (level L+1 contains
level L), which is what makes refinement traces monotone level over level.
Times stay exact `Fraction`s until they cross into a numerical kernel;
this avoids spurious duplicates from floating-point noise when grids are
merged with band breakpoints.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError

MAX_LEVEL = 20

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class TimeGrid:
    """A sorted tuple of exact rational times in (0, 1], last time == 1."""

    level: int
    times: tuple[Fraction, ...]

    def __post_init__(self):
        ts = self.times
        if not ts:
            raise DomainError("a time grid cannot be empty")
        if any(t <= 0 or t > 1 for t in ts):
            raise DomainError("grid times must lie in (0, 1]")
        if any(a >= b for a, b in zip(ts, ts[1:])):
            raise DomainError("grid times must be strictly increasing")
        if ts[-1] != ONE:
            raise DomainError("the last grid time must be 1")

    def __len__(self) -> int:
        return len(self.times)

    def __iter__(self):
        return iter(self.times)

    def as_floats(self) -> np.ndarray:
        return np.array([float(t) for t in self.times], dtype=np.float64)


def grid_at_level(level: int, max_level: int = MAX_LEVEL) -> TimeGrid:
    """The 2^level dyadic times k * 2^-level, k = 1..2^level."""
    if level < 0:
        raise DomainError(f"level must be nonnegative, got {level}")
    if level > max_level:
        raise DomainError(
            f"level {level} exceeds the configured maximum {max_level}; "
            f"a level-{level} grid would hold 2^{level} times"
        )
    return TimeGrid(level, _dyadic_times(level))


@lru_cache(maxsize=32)
def _dyadic_times(level: int) -> tuple[Fraction, ...]:
    n = 1 << level
    return tuple(Fraction(k, n) for k in range(1, n + 1))


def merge_with(grid: TimeGrid | Sequence[Fraction],
               extra_times: Iterable[Fraction]) -> tuple[Fraction, ...]:
    """Sorted, deduplicated union of a grid with extra rational times.

    Exact rational arithmetic; extra times must lie in (0, 1].
    """
    base = tuple(grid.times) if isinstance(grid, TimeGrid) else tuple(grid)
    extras = [Fraction(t) for t in extra_times]
    for t in extras:
        if t <= 0 or t > 1:
            raise DomainError(f"merge time {t} outside (0, 1]")
    return tuple(sorted(set(base) | set(extras)))
