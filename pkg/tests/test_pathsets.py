import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wienerband.errors import DomainError, PreconditionError, SetSpecError
from wienerband.pathsets import (BandExpr, BandSet, DifferenceExpr,
                                 PiecewisePath, Rectangle, UnionExpr, band,
                                 contains, expr_to_obj, intersect,
                                 intersect_rectangles, load_setspec,
                                 parse_setspec, parse_time, path_points,
                                 pl_constant, pl_points, project,
                                 structural_relation_check)
from wienerband.timegrid import grid_at_level, merge_with
from wienerband.verify import random_band, random_path

F = Fraction
INF = math.inf


# ---------------------------------------------------------------------------
# projection

def test_project_constant_band():
    rect = project(band(-1.0, 1.0), (F(1, 2), F(1)))
    assert rect.los == (-1.0, -1.0)
    assert rect.his == (1.0, 1.0)
    assert not rect.is_empty


def test_project_one_sided():
    rect = project(band(-INF, 0.75), grid_at_level(2).times)
    assert all(lo == -INF for lo in rect.los)
    assert all(hi == 0.75 for hi in rect.his)


def test_project_interpolates_linearly():
    upper = pl_points([(0, 0.0), (F(1, 2), -1.0), (1, -1.0)])
    b = BandSet(pl_constant(-2.0), upper)
    rect = project(b, (F(1, 4), F(1, 2), F(1)))
    assert rect.his == (-0.5, -1.0, -1.0)


def test_project_requires_breakpoints_in_grid():
    upper = pl_points([(0, 1.0), (F(3, 8), 0.5), (1, 1.0)])
    b = BandSet(pl_constant(-1.0), upper)
    with pytest.raises(PreconditionError, match="3/8"):
        project(b, grid_at_level(1).times)
    rect = project(b, merge_with(grid_at_level(1), b.breakpoints()))
    assert F(3, 8) in rect.times


def test_project_empty_band_gives_empty_rectangle():
    b = band(0.5, 1.5)  # 0 not between bounds at t=0
    assert b.is_empty
    rect = project(b, grid_at_level(1).times)
    assert rect.is_empty


def test_projection_exactness_witness():
    # random in-rectangle values, joined linearly from (0, 0), stay in band
    rng = np.random.default_rng(11)
    for _ in range(30):
        b = random_band(rng)
        grid = merge_with(grid_at_level(4), b.breakpoints())
        rect = project(b, grid)
        vals = []
        for lo, hi in zip(rect.los, rect.his):
            lo_c = max(lo, -3.0)
            hi_c = min(hi, 3.0)
            vals.append(float(rng.uniform(lo_c, min(hi_c, lo_c + 6.0))))
        path = path_points([(F(0), 0.0)] + list(zip(grid, vals)))
        assert contains(b, path)


def test_monotone_projection_restriction():
    rng = np.random.default_rng(12)
    for _ in range(20):
        b = random_band(rng)
        g1 = merge_with(grid_at_level(2), b.breakpoints())
        g2 = merge_with(grid_at_level(5), b.breakpoints())
        r1 = project(b, g1)
        r2 = project(b, g2)
        assert r2.restrict(g1) == r1


# ---------------------------------------------------------------------------
# membership

def test_contains_zero_path_in_symmetric_band():
    zero = path_points([(0, 0.0), (1, 0.0)])
    assert contains(band(-1.0, 1.0), zero)


def test_contains_rejects_rising_lower_bound():
    lower = pl_points([(0, 0.0), (1, 0.5)])  # lower(t) = t/2
    b = BandSet(lower, pl_constant(2.0))
    zero = path_points([(0, 0.0), (1, 0.0)])
    assert not contains(b, zero)


def test_contains_matches_dense_sampling():
    rng = np.random.default_rng(13)
    n = 1 << 14
    ts = [F(k, n) for k in range(n + 1)]
    for _ in range(20):
        b = random_band(rng)
        p = random_path(rng)
        dense = all(b.lower(t) <= p(t) <= b.upper(t) for t in ts)
        assert contains(b, p) == dense


def test_path_must_vanish_at_zero():
    with pytest.raises(DomainError):
        path_points([(0, 0.5), (1, 0.0)])


# ---------------------------------------------------------------------------
# structural relation

def test_structural_member_inside_all_levels():
    b = band(-2.0, 2.0)
    p = path_points([(0, 0.0), (F(1, 2), 1.0), (1, -1.0)])
    report = structural_relation_check(b, p, 10)
    assert report.member and report.consistent
    assert report.first_exclusion_level is None


def test_structural_violation_inside_quarter_half_window():
    # violates upper = 1 only inside (1/4, 1/2); level 3 grid is the first
    # dyadic grid meeting that open interval (at 3/8)
    b = band(-3.0, 1.0)
    p = path_points([(0, 0.0), (F(1, 4), 0.9), (F(3, 8), 1.4),
                     (F(1, 2), 0.9), (1, 0.0)])
    assert not contains(b, p)
    report = structural_relation_check(b, p, 10)
    assert report.consistent
    assert report.first_exclusion_level == 3


def test_structural_violation_at_endpoint_seen_at_level_zero():
    b = band(-1.0, 1.0)
    p = path_points([(0, 0.0), (1, 5.0)])
    report = structural_relation_check(b, p, 4)
    assert report.first_exclusion_level == 0
    assert report.consistent


def test_structural_rejects_low_max_level():
    b = band(-3.0, 1.0)
    p = path_points([(0, 0.0), (F(3, 8), 0.2), (1, 0.0)])
    with pytest.raises(PreconditionError):
        structural_relation_check(b, p, 2)


def test_structural_rejects_empty_band():
    with pytest.raises(DomainError):
        structural_relation_check(band(0.5, 1.5),
                                  path_points([(0, 0.0), (1, 0.0)]), 4)


def test_structural_rejects_non_dyadic_breakpoints():
    b = BandSet(pl_constant(-1.0),
                pl_points([(0, 1.0), (F(1, 3), 0.9), (1, 1.0)]))
    with pytest.raises(PreconditionError):
        structural_relation_check(b, path_points([(0, 0.0), (1, 0.0)]), 10)


# ---------------------------------------------------------------------------
# intersection algebra

def _bounds_equal(f, g, probes):
    return all(abs(f(t) - g(t)) <= 1e-9 or f(t) == g(t) for t in probes)


def _bands_equal(b1, b2):
    probes = sorted({F(k, 64) for k in range(65)}
                    | set(b1.breakpoints()) | set(b2.breakpoints()))
    return _bounds_equal(b1.lower, b2.lower, probes) and \
        _bounds_equal(b1.upper, b2.upper, probes)


def test_intersect_examples():
    got = intersect(band(-1.0, 1.0), band(-INF, 0.5))
    assert _bands_equal(got, band(-1.0, 0.5))

    low = band(-2.0, -1.0)
    # disjoint at t=1 (and everywhere)
    high_lower = pl_points([(0, -0.5), (1, 1.0)])
    high = BandSet(high_lower, pl_constant(3.0))
    assert intersect(low, high).is_empty

    b = band(-1.5, 0.8)
    assert _bands_equal(intersect(b, b), b)


def test_intersect_exact_crossing_breakpoint():
    # lower bounds t -> t and constant 0.3 cross near t = 3/10 (exactly at
    # the rational value of the double 0.3), a non-dyadic breakpoint
    b1 = BandSet(pl_points([(0, 0.0), (1, 1.0)]), pl_constant(5.0))
    b2 = BandSet(pl_constant(0.3), pl_constant(5.0))
    got = intersect(b1, b2)
    crossing = [t for t in got.lower.breakpoint_times() if t not in (0, 1)]
    assert len(crossing) == 1
    assert abs(float(crossing[0]) - 0.3) < 1e-15
    assert got.lower(crossing[0]) == pytest.approx(0.3, abs=1e-15)
    assert got.lower(F(1, 10)) == pytest.approx(0.3, abs=1e-15)
    assert got.lower(F(1, 2)) == pytest.approx(0.5, abs=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_intersect_commutative_associative_idempotent(seed):
    rng = np.random.default_rng(seed)
    a, b_, c = random_band(rng), random_band(rng), random_band(rng)
    ab = intersect(a, b_)
    ba = intersect(b_, a)
    assert ab.is_empty == ba.is_empty
    if not ab.is_empty:
        assert _bands_equal(ab, ba)
    left = intersect(intersect(a, b_), c)
    right = intersect(a, intersect(b_, c))
    assert left.is_empty == right.is_empty
    if not left.is_empty:
        assert _bands_equal(left, right)
    assert _bands_equal(intersect(a, a), a)


def test_intersect_empty_absorbing():
    empty = band(0.5, 1.5)
    assert empty.is_empty
    assert intersect(empty, band(-1.0, 1.0)).is_empty


def test_rectangle_intersection():
    times = grid_at_level(1).times
    r1 = Rectangle(times, (-1.0, -1.0), (1.0, 1.0))
    r2 = Rectangle(times, (0.0, -2.0), (2.0, 0.5))
    r = intersect_rectangles(r1, r2)
    assert r.los == (0.0, -1.0)
    assert r.his == (1.0, 0.5)
    with pytest.raises(PreconditionError):
        intersect_rectangles(r1, Rectangle((F(1),), (0.0,), (1.0,)))


# ---------------------------------------------------------------------------
# set expressions

def test_union_arity_cap():
    members = tuple(band(-1.0 - k, 1.0 + k) for k in range(9))
    with pytest.raises(DomainError):
        UnionExpr(members)
    assert len(UnionExpr(members[:8]).members) == 8


def test_union_pairwise_overlaps():
    a = band(-1.0, 0.2)
    b_ = band(-0.2, 1.0)
    far_lower = pl_points([(0, -0.1), (1, 5.0)])
    far = BandSet(far_lower, pl_constant(9.0))
    expr = UnionExpr((a, b_, far))
    overlaps = expr.pairwise_overlaps()
    assert overlaps[(0, 1)] is True
    assert overlaps[(0, 2)] is False


def test_difference_requires_nesting():
    with pytest.raises(DomainError):
        DifferenceExpr(band(-1.0, 1.0), band(-2.0, 0.5))
    expr = DifferenceExpr(band(-2.0, 2.0), band(-1.0, 1.0))
    assert expr.breakpoints() == (F(1),)


# ---------------------------------------------------------------------------
# set-spec files

def test_parse_time_forms():
    assert parse_time("3/8") == F(3, 8)
    assert parse_time("3/2^3") == F(3, 8)
    assert parse_time("0") == F(0)
    assert parse_time("1") == F(1)
    with pytest.raises(SetSpecError):
        parse_time("1/3")
    with pytest.raises(SetSpecError):
        parse_time("5/4")
    with pytest.raises(SetSpecError):
        parse_time(0.25)


def test_parse_band_spec():
    expr = parse_setspec({
        "type": "band",
        "lower": "-inf",
        "upper": [["0", "1.0"], ["1/2", "-1.0"], ["1", "-1.0"]],
    })
    assert isinstance(expr, BandExpr)
    assert expr.band.lower.is_infinite
    assert expr.band.upper(F(1, 4)) == 0.0


def test_parse_rejects_malformed():
    with pytest.raises(SetSpecError):
        parse_setspec({"type": "polygon"})
    with pytest.raises(SetSpecError):
        parse_setspec({"type": "band", "lower": "-inf"})
    with pytest.raises(SetSpecError):
        parse_setspec({"type": "band", "lower": "nope", "upper": "+inf"})
    with pytest.raises(SetSpecError):
        parse_setspec({"type": "union", "members": []})


def test_bundled_specs_roundtrip(tmp_path):
    from wienerband.setspecs import available, setspec_path
    names = available()
    assert "onesided_a10.json" in names
    for name in names:
        expr = load_setspec(setspec_path(name))
        obj = expr_to_obj(expr)
        p = tmp_path / name
        p.write_text(json.dumps(obj))
        again = load_setspec(p)
        assert expr_to_obj(again) == obj


def test_load_rejects_bad_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(SetSpecError):
        load_setspec(p)
