"""Representable path-constraint sets.

A band is {x : lower(t) <= x(t) <= upper(t) for all t in [0,1]} with
piecewise-linear bounds; it stands in for closed path sets with a finite
description.  Projections of a nonempty band onto any finite time grid are
exact interval products: any in-rectangle values can be connected inside
the band (clamp a straight line to the bounds), so nothing outside the
rectangle is lost and nothing inside is spurious.

Bands are closed but not compact in sup norm.  The refinement limit of
their cylinder measures still identifies their measure, because pointwise
band constraints are witnessed on a dense time set -- the same structural
relation that drives the compact case.  A sup-norm ball of radius r around
a piecewise-linear center c is exactly the band [c - r, c + r].

Note on exhaustions: increasing unions of compact subsets of a set A need
not exhaust A (a half-open ray of scaled copies of a fixed path is the
classic picture); the widening-family checks in `measure_engine` therefore
always name their limit set explicitly instead of inferring it.

File format (JSON-shaped), times as exact dyadic strings "k/2^m" or plain
fractions, values as decimal strings or numbers, "-inf"/"+inf" sentinels:

    {"type": "band", "lower": [["0","-1"],["1","-1"]] | "-inf",
     "upper": [["0","1"],["1","1"]] | "+inf"}
    {"type": "union", "members": [<band>, ...]}            # at most 8
    {"type": "difference", "outer": <band>, "inner": <band>}
"""

from __future__ import annotations

import json
import math
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import DomainError, PreconditionError, SetSpecError
from .timegrid import ZERO, ONE

INF = math.inf


# ---------------------------------------------------------------------------
# piecewise-linear functions on [0, 1]

@dataclass(frozen=True)
class PiecewiseLinear:
    """Breakpoints ((t, value), ...) with exact rational t covering [0, 1].

    Values are finite floats, or all equal +/-inf for a constant sentinel.
    """

    points: tuple[tuple[Fraction, float], ...]

    def __post_init__(self):
        pts = tuple((Fraction(t), float(v)) for t, v in self.points)
        object.__setattr__(self, "points", pts)
        ts = [t for t, _ in pts]
        vs = [v for _, v in pts]
        if len(pts) < 2:
            raise DomainError("a bound needs breakpoints at least at t=0 and t=1")
        if ts[0] != ZERO or ts[-1] != ONE:
            raise DomainError("bound breakpoints must cover [0, 1]")
        if any(a >= b for a, b in zip(ts, ts[1:])):
            raise DomainError("bound breakpoints must be strictly increasing")
        if any(t < 0 or t > 1 for t in ts):
            raise DomainError("bound breakpoints must lie in [0, 1]")
        if any(math.isnan(v) for v in vs):
            raise DomainError("bound values cannot be NaN")
        if any(math.isinf(v) for v in vs) and len(set(vs)) > 1:
            raise DomainError(
                "infinite bound values are only allowed as constant sentinels")

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.points[0][1])

    def breakpoint_times(self) -> tuple[Fraction, ...]:
        return tuple(t for t, _ in self.points)

    def __call__(self, t: Fraction | int) -> float:
        t = Fraction(t)
        if t < 0 or t > 1:
            raise DomainError(f"bound evaluated outside [0, 1]: {t}")
        pts = self.points
        i = bisect_right([p[0] for p in pts], t) - 1
        if i == len(pts) - 1:
            return pts[-1][1]
        (t0, v0), (t1, v1) = pts[i], pts[i + 1]
        if v0 == v1:
            return v0
        return v0 + (v1 - v0) * float((t - t0) / (t1 - t0))


def pl_constant(value: float) -> PiecewiseLinear:
    return PiecewiseLinear(((ZERO, value), (ONE, value)))


def pl_points(pairs: Iterable[tuple[Fraction | str | int, float]]) -> PiecewiseLinear:
    return PiecewiseLinear(tuple((Fraction(t), float(v)) for t, v in pairs))


def _merged_times(*fns: PiecewiseLinear) -> list[Fraction]:
    ts: set[Fraction] = set()
    for f in fns:
        ts.update(f.breakpoint_times())
    return sorted(ts)


def _combine(f: PiecewiseLinear, g: PiecewiseLinear, want_max: bool) -> PiecewiseLinear:
    pick = max if want_max else min
    if f.is_infinite or g.is_infinite:
        fv, gv = f.points[0][1], g.points[0][1]
        if f.is_infinite and g.is_infinite:
            return pl_constant(pick(fv, gv))
        inf_fn, fin_fn = (f, g) if f.is_infinite else (g, f)
        v = inf_fn.points[0][1]
        # max with -inf (or min with +inf) is the finite bound
        if (want_max and v == -INF) or (not want_max and v == INF):
            return fin_fn
        return pl_constant(v)

    times = _merged_times(f, g)
    out: list[tuple[Fraction, float]] = []
    for t0, t1 in zip(times, times[1:]):
        d0 = f(t0) - g(t0)
        d1 = f(t1) - g(t1)
        out.append((t0, pick(f(t0), g(t0))))
        if d0 * d1 < 0.0:
            # exact rational crossing of the two linear pieces
            frac = Fraction(d0) / (Fraction(d0) - Fraction(d1))
            tc = t0 + (t1 - t0) * frac
            if t0 < tc < t1:
                out.append((tc, pick(f(tc), g(tc))))
    out.append((ONE, pick(f(ONE), g(ONE))))
    dedup = [out[0]]
    for t, v in out[1:]:
        if t != dedup[-1][0]:
            dedup.append((t, v))
    return PiecewiseLinear(tuple(dedup))


def pl_max(f: PiecewiseLinear, g: PiecewiseLinear) -> PiecewiseLinear:
    return _combine(f, g, True)


def pl_min(f: PiecewiseLinear, g: PiecewiseLinear) -> PiecewiseLinear:
    return _combine(f, g, False)


# ---------------------------------------------------------------------------
# bands

@dataclass(frozen=True)
class BandSet:
    """{x in C : lower(t) <= x(t) <= upper(t)}; may be empty (flagged)."""

    lower: PiecewiseLinear
    upper: PiecewiseLinear

    def __post_init__(self):
        if self.lower.points[0][1] == INF:
            raise DomainError("lower bound cannot be +inf")
        if self.upper.points[0][1] == -INF:
            raise DomainError("upper bound cannot be -inf")

    @property
    def is_empty(self) -> bool:
        """True iff no continuous path vanishing at 0 satisfies the bounds.

        Sufficient to check at breakpoints of both bounds: the gap
        upper - lower is linear in between.  Membership additionally pins
        x(0) = 0, so 0 must lie between the bounds at t = 0.
        """
        if self.lower(ZERO) > 0.0 or self.upper(ZERO) < 0.0:
            return True
        for t in _merged_times(self.lower, self.upper):
            if self.lower(t) > self.upper(t):
                return True
        return False

    def breakpoints(self) -> tuple[Fraction, ...]:
        """Bound kink times inside (0, 1]; these must join any projection grid."""
        ts = set()
        for f in (self.lower, self.upper):
            if not f.is_infinite:
                ts.update(t for t in f.breakpoint_times() if t > 0)
        return tuple(sorted(ts))

    def bounds_at(self, times: Sequence[Fraction]) -> tuple[list[float], list[float]]:
        return ([self.lower(t) for t in times], [self.upper(t) for t in times])


def band(lower, upper) -> BandSet:
    """Convenience constructor from constants, point lists, or bounds."""
    def as_pl(x, which):
        if isinstance(x, PiecewiseLinear):
            return x
        if isinstance(x, (int, float)):
            return pl_constant(float(x))
        return pl_points(x)
    return BandSet(as_pl(lower, "lower"), as_pl(upper, "upper"))


def intersect(b1: BandSet, b2: BandSet) -> BandSet:
    """Pointwise intersection: lower = max of lowers, upper = min of uppers.

    Exact: crossings of the linear pieces become new breakpoints (rational,
    not necessarily dyadic).  The result's is_empty flag is the empty
    marker.
    """
    return BandSet(pl_max(b1.lower, b2.lower), pl_min(b1.upper, b2.upper))


# ---------------------------------------------------------------------------
# rectangles (exact projections)

@dataclass(frozen=True)
class Rectangle:
    """Product of per-time intervals; the projection of a band onto a grid."""

    times: tuple[Fraction, ...]
    los: tuple[float, ...]
    his: tuple[float, ...]
    empty: bool = False

    def __post_init__(self):
        if not (len(self.times) == len(self.los) == len(self.his)):
            raise DomainError("rectangle fields must have equal length")

    @property
    def is_empty(self) -> bool:
        return self.empty or any(l > h for l, h in zip(self.los, self.his))

    @property
    def is_degenerate(self) -> bool:
        """Some interval is a single point: the slice has Lebesgue measure 0."""
        return any(l == h for l, h in zip(self.los, self.his))

    def restrict(self, times: Sequence[Fraction]) -> "Rectangle":
        index = {t: i for i, t in enumerate(self.times)}
        idx = [index[Fraction(t)] for t in times]
        return Rectangle(tuple(self.times[i] for i in idx),
                         tuple(self.los[i] for i in idx),
                         tuple(self.his[i] for i in idx),
                         self.empty)


def project(b: BandSet, grid: Sequence[Fraction]) -> Rectangle:
    """Exact projection of a band onto a time grid.

    Requires the grid to contain every bound breakpoint in (0, 1]; merge
    first (`timegrid.merge_with`).  Between grid times both bounds are then
    linear, so linearly interpolating any in-interval values stays in the
    band and the projection is exactly the interval product.
    """
    times = tuple(Fraction(t) for t in grid)
    tset = set(times)
    for t in b.breakpoints():
        if t not in tset:
            raise PreconditionError(
                f"grid is missing band breakpoint {t}; merge breakpoints "
                f"into the grid before projecting")
    if b.is_empty:
        return Rectangle(times, (1.0,) * len(times), (-1.0,) * len(times), True)
    los, his = b.bounds_at(times)
    return Rectangle(times, tuple(los), tuple(his))


def intersect_rectangles(r1: Rectangle, r2: Rectangle) -> Rectangle:
    if r1.times != r2.times:
        raise PreconditionError("rectangle intersection needs a common grid")
    if r1.empty or r2.empty:
        return Rectangle(r1.times, r1.los, r1.his, True)
    return Rectangle(r1.times,
                     tuple(map(max, r1.los, r2.los)),
                     tuple(map(min, r1.his, r2.his)))


# ---------------------------------------------------------------------------
# paths and membership

@dataclass(frozen=True)
class PiecewisePath:
    """A piecewise-linear path with rational breakpoints and x(0) = 0."""

    fn: PiecewiseLinear

    def __post_init__(self):
        if self.fn.is_infinite:
            raise DomainError("a path must be finite")
        if self.fn(ZERO) != 0.0:
            raise DomainError("paths must vanish at t=0")

    def __call__(self, t) -> float:
        return self.fn(t)

    def breakpoint_times(self) -> tuple[Fraction, ...]:
        return self.fn.breakpoint_times()


def path_points(pairs) -> PiecewisePath:
    return PiecewisePath(pl_points(pairs))


def contains(b: BandSet, path: PiecewisePath) -> bool:
    """Membership test, exact for piecewise-linear data.

    Checked at the union of breakpoints of the path and both bounds: the
    margins path-lower and upper-path are piecewise linear, and a linear
    function negative somewhere in a segment is negative at an endpoint.
    """
    if b.is_empty:
        return False
    ts = set(_merged_times(b.lower, b.upper, path.fn))
    for t in sorted(ts):
        v = path(t)
        if v < b.lower(t) or v > b.upper(t):
            return False
    return True


@dataclass(frozen=True)
class StructuralReport:
    member: bool
    levels_checked: int
    first_exclusion_level: int | None
    consistent: bool


def _dyadic_level(t: Fraction) -> int:
    den = t.denominator
    level = den.bit_length() - 1
    if (1 << level) != den:
        raise PreconditionError(f"time {t} is not dyadic; no dyadic grid contains it")
    return level


def structural_relation_check(b: BandSet, path: PiecewisePath,
                              max_level: int) -> StructuralReport:
    """Check the projection/preimage identity on dyadic grids.

    A member path projects into the band's rectangle at every level; a
    non-member is excluded at some level <= max_level, provided max_level
    reaches the breakpoint levels of band and path (then the finest grid
    contains every kink, and piecewise-linear violations are witnessed at
    kinks).
    """
    if b.is_empty:
        raise DomainError(
            "band admits no path with x(0)=0; positive-time grids carry no "
            "witness for a violation pinned at t=0")
    kinks = [t for t in b.breakpoints()]
    kinks += [t for t in path.breakpoint_times() if t > 0]
    need = max((_dyadic_level(t) for t in kinks), default=0)
    if max_level < need:
        raise PreconditionError(
            f"max_level {max_level} below the breakpoint level {need}")

    member = contains(b, path)
    first_excluded = None
    for level in range(max_level + 1):
        n = 1 << level
        inside = True
        for k in range(1, n + 1):
            t = Fraction(k, n)
            v = path(t)
            if v < b.lower(t) or v > b.upper(t):
                inside = False
                break
        if not inside:
            first_excluded = level
            break
    consistent = (first_excluded is None) if member else (first_excluded is not None)
    return StructuralReport(member, max_level, first_excluded, consistent)


# ---------------------------------------------------------------------------
# set expressions

MAX_UNION_ARITY = 8


class SetExpr:
    """A band, a finite union of bands, or a nested difference."""

    def involved_bands(self) -> tuple[BandSet, ...]:
        raise NotImplementedError

    def breakpoints(self) -> tuple[Fraction, ...]:
        ts: set[Fraction] = set()
        for b in self.involved_bands():
            ts.update(b.breakpoints())
        return tuple(sorted(ts))


@dataclass(frozen=True)
class BandExpr(SetExpr):
    band: BandSet

    def involved_bands(self):
        return (self.band,)


@dataclass(frozen=True)
class UnionExpr(SetExpr):
    members: tuple[BandSet, ...]

    def __post_init__(self):
        if not self.members:
            raise DomainError("union needs at least one member")
        if len(self.members) > MAX_UNION_ARITY:
            raise DomainError(
                f"union arity {len(self.members)} exceeds {MAX_UNION_ARITY}; "
                f"inclusion-exclusion would need 2^{len(self.members)} - 1 terms")

    def involved_bands(self):
        return self.members

    def pairwise_overlaps(self) -> dict[tuple[int, int], bool]:
        """Which member pairs intersect (band intersection nonempty)."""
        out = {}
        for i in range(len(self.members)):
            for j in range(i + 1, len(self.members)):
                out[(i, j)] = not intersect(self.members[i],
                                            self.members[j]).is_empty
        return out


@dataclass(frozen=True)
class DifferenceExpr(SetExpr):
    outer: BandSet
    inner: BandSet

    def __post_init__(self):
        # inner must sit inside outer; pointwise comparison at the
        # breakpoint union is exact for piecewise-linear bounds
        ts = set(_merged_times(self.outer.lower, self.outer.upper,
                               self.inner.lower, self.inner.upper))
        for t in sorted(ts):
            if self.inner.lower(t) < self.outer.lower(t) or \
               self.inner.upper(t) > self.outer.upper(t):
                raise DomainError(
                    f"difference requires inner within outer; violated at t={t}")

    def involved_bands(self):
        return (self.outer, self.inner)


# ---------------------------------------------------------------------------
# set-spec files

def parse_time(s) -> Fraction:
    """Exact dyadic time from "k/2^m", "k/n", or integer strings."""
    if isinstance(s, int):
        f = Fraction(s)
    elif isinstance(s, str):
        txt = s.strip()
        try:
            if "^" in txt:
                num, expo = txt.split("/2^")
                f = Fraction(int(num), 2 ** int(expo))
            else:
                f = Fraction(txt)
        except (ValueError, ZeroDivisionError) as e:
            raise SetSpecError(f"cannot parse time {s!r}: {e}") from None
    else:
        raise SetSpecError(f"time must be an exact string, got {s!r}")
    den = f.denominator
    if den & (den - 1):
        raise SetSpecError(f"time {s!r} is not a dyadic rational")
    if f < 0 or f > 1:
        raise SetSpecError(f"time {s!r} outside [0, 1]")
    return f


def parse_value(v) -> float:
    if isinstance(v, (int, float)):
        return float(v)
    if isinstance(v, str):
        txt = v.strip().lower()
        if txt in ("-inf", "-infinity"):
            return -INF
        if txt in ("+inf", "inf", "+infinity", "infinity"):
            return INF
        try:
            return float(txt)
        except ValueError:
            raise SetSpecError(f"cannot parse value {v!r}") from None
    raise SetSpecError(f"value must be a decimal string or number, got {v!r}")


def _parse_bound(obj, which: str) -> PiecewiseLinear:
    if isinstance(obj, str):
        v = parse_value(obj)
        if not math.isinf(v):
            raise SetSpecError(
                f"{which} given as a bare string must be '-inf' or '+inf'")
        return pl_constant(v)
    if not isinstance(obj, list):
        raise SetSpecError(f"{which} must be a breakpoint list or an inf sentinel")
    try:
        pairs = [(parse_time(t), parse_value(v)) for t, v in obj]
    except (TypeError, ValueError):
        raise SetSpecError(f"{which} breakpoints must be [time, value] pairs") from None
    try:
        return pl_points(pairs)
    except DomainError as e:
        raise SetSpecError(f"invalid {which}: {e}") from None


def _parse_band(obj) -> BandSet:
    if obj.get("type") != "band":
        raise SetSpecError(f"expected a band object, got type={obj.get('type')!r}")
    try:
        return BandSet(_parse_bound(obj["lower"], "lower"),
                       _parse_bound(obj["upper"], "upper"))
    except KeyError as e:
        raise SetSpecError(f"band is missing field {e}") from None
    except DomainError as e:
        raise SetSpecError(str(e)) from None


def parse_setspec(obj: dict) -> SetExpr:
    if not isinstance(obj, dict) or "type" not in obj:
        raise SetSpecError("set spec must be an object with a 'type' field")
    kind = obj["type"]
    if kind == "band":
        return BandExpr(_parse_band(obj))
    if kind == "union":
        members = obj.get("members")
        if not isinstance(members, list) or not members:
            raise SetSpecError("union needs a nonempty 'members' list")
        try:
            return UnionExpr(tuple(_parse_band(m) for m in members))
        except DomainError as e:
            raise SetSpecError(str(e)) from None
    if kind == "difference":
        try:
            return DifferenceExpr(_parse_band(obj["outer"]),
                                  _parse_band(obj["inner"]))
        except KeyError as e:
            raise SetSpecError(f"difference is missing field {e}") from None
        except DomainError as e:
            raise SetSpecError(str(e)) from None
    raise SetSpecError(f"unknown set type {kind!r}")


def load_setspec(path) -> SetExpr:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as e:
            raise SetSpecError(f"{path}: invalid JSON: {e}") from None
    return parse_setspec(obj)


def _fmt_time(t: Fraction) -> str:
    return str(t.numerator) if t.denominator == 1 else f"{t.numerator}/{t.denominator}"


def _bound_to_obj(f: PiecewiseLinear):
    if f.is_infinite:
        return "-inf" if f.points[0][1] < 0 else "+inf"
    return [[_fmt_time(t), repr(v)] for t, v in f.points]


def band_to_obj(b: BandSet) -> dict:
    return {"type": "band", "lower": _bound_to_obj(b.lower),
            "upper": _bound_to_obj(b.upper)}


def expr_to_obj(expr: SetExpr) -> dict:
    if isinstance(expr, BandExpr):
        return band_to_obj(expr.band)
    if isinstance(expr, UnionExpr):
        return {"type": "union", "members": [band_to_obj(m) for m in expr.members]}
    if isinstance(expr, DifferenceExpr):
        return {"type": "difference", "outer": band_to_obj(expr.outer),
                "inner": band_to_obj(expr.inner)}
    raise DomainError(f"unknown expression {expr!r}")
