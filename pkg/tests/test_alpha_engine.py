import math
from fractions import Fraction

import numpy as np
import pytest

from wienerband.alpha_engine import (AlphaValue, QuadratureConfig,
                                     alpha_expr, alpha_rectangle,
                                     clear_kernel_cache)
from wienerband.errors import DomainError, PreconditionError
from wienerband.mc_oracle import McConfig, estimate_rectangles_union
from wienerband.pathsets import (BandExpr, BandSet, DifferenceExpr, Rectangle,
                                 UnionExpr, band, pl_constant, pl_points,
                                 project)
from wienerband.timegrid import grid_at_level, merge_with
from wienerband.verify import random_band, tensor_alpha_oracle

F = Fraction
INF = math.inf
TWO_PHI1_M1 = 0.6826894921370859  # 2*Phi(1) - 1, from the erf series oracle


def test_config_validation():
    with pytest.raises(DomainError):
        QuadratureConfig(space_points=8)
    with pytest.raises(DomainError):
        QuadratureConfig(truncation=4.0)
    with pytest.raises(DomainError):
        QuadratureConfig(rule="gauss")


def test_single_time_interval_matches_cdf():
    rect = Rectangle((F(1),), (-1.0,), (1.0,))
    a = alpha_rectangle(rect)
    assert abs(a.value - TWO_PHI1_M1) < 1e-8
    assert a.est_quadrature_error < 1e-8


def test_degenerate_interval_exactly_zero():
    rect = Rectangle((F(1, 2), F(1)), (-1.0, 0.3), (1.0, 0.3))
    a = alpha_rectangle(rect)
    assert a.value == 0.0
    assert a.est_quadrature_error == 0.0


def test_empty_rectangle_exactly_zero():
    rect = Rectangle((F(1),), (1.0,), (-1.0,))
    assert alpha_rectangle(rect).value == 0.0


def test_two_dim_matches_tensor_quadrature():
    times = (F(1, 2), F(1))
    rect = Rectangle(times, (-1.0, -1.0), (1.0, 1.0))
    val = alpha_rectangle(rect).value
    ref = tensor_alpha_oracle(times, rect.los, rect.his, pts_per_axis=2049)
    assert abs(val - ref) < 1e-8


def test_trapezoid_rule_agrees():
    rect = Rectangle((F(1, 2), F(1)), (-1.0, -1.0), (1.0, 1.0))
    simpson = alpha_rectangle(rect, QuadratureConfig(1024, rule="simpson"))
    trap = alpha_rectangle(rect, QuadratureConfig(2048, rule="trapezoid"))
    assert abs(simpson.value - trap.value) <= \
        simpson.est_quadrature_error + trap.est_quadrature_error + 1e-7


def test_union_of_disjoint_bands_is_exact_sum():
    # bounds separate from t=1/2 on; both bands stay open around 0 at t=0
    a = BandSet(pl_constant(-2.0),
                pl_points([(0, 0.5), (F(1, 2), -0.5), (1, -0.5)]))
    b = BandSet(pl_points([(0, -0.5), (F(1, 2), 0.5), (1, 0.5)]),
                pl_constant(2.0))
    grid = merge_with(grid_at_level(3), [F(1, 2)])
    ua = alpha_expr(BandExpr(a), grid)
    ub = alpha_expr(BandExpr(b), grid)
    uu = alpha_expr(UnionExpr((a, b)), grid)
    assert uu.value == ua.value + ub.value


def test_union_idempotent():
    b = band(-1.0, 1.0)
    grid = grid_at_level(2).times
    single = alpha_expr(BandExpr(b), grid)
    doubled = alpha_expr(UnionExpr((b, b)), grid)
    assert doubled.value == single.value


def test_union_overlapping_matches_mc():
    a = band(-1.0, 0.5)
    b = band(-0.5, 1.0)
    grid = grid_at_level(3).times
    ie = alpha_expr(UnionExpr((a, b)), grid)
    mc = estimate_rectangles_union([project(a, grid), project(b, grid)],
                                   McConfig(10**6, 99))
    assert abs(ie.value - mc.p_hat) <= \
        3.0 * (mc.std_error + ie.est_quadrature_error)


def test_difference_expression():
    outer = band(-2.0, 2.0)
    inner = band(-1.0, 1.0)
    grid = grid_at_level(2).times
    d = alpha_expr(DifferenceExpr(outer, inner), grid)
    ao = alpha_expr(BandExpr(outer), grid)
    ai = alpha_expr(BandExpr(inner), grid)
    assert d.value == pytest.approx(ao.value - ai.value, abs=1e-15)


def test_alpha_expr_requires_breakpoints_in_grid():
    b = BandSet(pl_constant(-1.0),
                pl_points([(0, 1.0), (F(3, 8), 0.8), (1, 1.0)]))
    with pytest.raises(PreconditionError):
        alpha_expr(BandExpr(b), grid_at_level(1).times)


def test_normalization_every_level():
    full = band(-INF, INF)
    for level in range(9):
        a = alpha_expr(BandExpr(full), grid_at_level(level).times)
        assert abs(a.value - 1.0) <= 1e-8


def test_monotone_in_level_small_battery():
    rng = np.random.default_rng(21)
    cfg = QuadratureConfig(space_points=256, truncation=6.0)
    for _ in range(8):
        b = random_band(rng)
        prev = None
        for level in range(6):
            grid = merge_with(grid_at_level(level), b.breakpoints())
            a = alpha_expr(BandExpr(b), grid, cfg)
            if prev is not None:
                slack = 2.0 * (prev.est_quadrature_error +
                               a.est_quadrature_error) + 1e-12
                assert a.value <= prev.value + slack
            prev = a


def test_resolution_doubling_bounded_by_estimate():
    rng = np.random.default_rng(22)
    for _ in range(20):
        b = random_band(rng)
        level = int(rng.integers(0, 5))
        grid = merge_with(grid_at_level(level), b.breakpoints())
        rect = project(b, grid)
        a_m = alpha_rectangle(rect, QuadratureConfig(512))
        a_2m = alpha_rectangle(rect, QuadratureConfig(1024))
        assert abs(a_2m.value - a_m.value) <= a_m.est_quadrature_error + 1e-12


def test_range_invariant_enforced():
    with pytest.raises(Exception):
        AlphaValue(1.5, (F(1),), 0.0)
    with pytest.raises(Exception):
        AlphaValue(-0.1, (F(1),), 0.0)


def test_kernel_cache_reuses_matrices():
    clear_kernel_cache()
    rect = Rectangle((F(1, 4), F(1, 2), F(3, 4), F(1)),
                     (-1.0,) * 4, (1.0,) * 4)
    a1 = alpha_rectangle(rect)
    a2 = alpha_rectangle(rect)
    assert a1.value == a2.value


def test_truncation_clips_far_sets_to_zero():
    # interval entirely beyond the truncation window carries ~1e-22 mass
    rect = Rectangle((F(1),), (11.0,), (12.0,))
    a = alpha_rectangle(rect, QuadratureConfig(256, truncation=10.0))
    assert a.value == 0.0
