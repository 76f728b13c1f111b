"""Refinement limits: from per-level Gaussian values to set measures.

phi_band drives the monotone limit over nested dyadic grids (each merged
with the band's breakpoints, so projections stay exact) and stops when
successive values agree to stop_delta or the level budget runs out.  The
per-level values decrease -- adding a time can only cut cylinder mass --
and the driver certifies that, within quadrature slack, on every step;
a violation is an internal-consistency error, not a user error.

mu_expr extends the limit to the band algebra: unions refine their
inclusion-exclusion totals, differences subtract measures of nested bands.
For bands we identify the measure with the refinement limit directly: a
band is a pointwise-constraint set, so membership is witnessed on any
dense time set exactly as for compact sets, and the limit of the projected
cylinder measures is its measure.  (The inner-regular supremum over
arbitrary compact subsets has no finite description and is out of reach by
construction; within the band algebra the two definitions coincide.)

The closed-form boundary-crossing oracles live here because the CLI
exposes them for convergence tables: neither is produced by the refinement
pipeline, which is what makes them legitimate ground truth.  Note the
refinement values converge from above: a grid maximum is below the path
supremum, so finite levels overestimate survival probabilities by
O(sqrt(grid gap)).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from .alpha_engine import AlphaValue, QuadratureConfig, alpha_expr
from .errors import DomainError, InternalConsistencyError
from .mc_oracle import McConfig, McEstimate, estimate_rectangle, \
    estimate_rectangles_union
from .pathsets import BandExpr, BandSet, DifferenceExpr, SetExpr, UnionExpr, \
    project
from .timegrid import MAX_LEVEL, grid_at_level, merge_with


@dataclass(frozen=True)
class RefinementPolicy:
    start_level: int = 0
    max_level: int = 10
    stop_delta: float = 1e-4
    extrapolate: bool = False

    def __post_init__(self):
        if not 0 <= self.start_level <= self.max_level <= MAX_LEVEL:
            raise DomainError(
                f"need 0 <= start_level <= max_level <= {MAX_LEVEL}")
        if self.stop_delta <= 0.0:
            raise DomainError("stop_delta must be positive")


@dataclass(frozen=True)
class MeasureEstimate:
    value: float
    alpha_trace: tuple[tuple[int, AlphaValue], ...]
    stopped_by: str  # "delta" | "max_level"
    mc_cross_check: McEstimate | None
    monotone_certified: bool

    def trace_values(self) -> list[float]:
        return [a.value for _, a in self.alpha_trace]


def _certify_step(prev: AlphaValue, cur: AlphaValue):
    slack = 2.0 * (prev.est_quadrature_error + cur.est_quadrature_error) + 1e-12
    if cur.value > prev.value + slack:
        raise InternalConsistencyError(
            f"refinement increased: {prev.value} -> {cur.value} "
            f"exceeds quadrature slack {slack}")


def _refine(eval_level: Callable[[int], AlphaValue],
            policy: RefinementPolicy) -> tuple[list, str]:
    trace: list[tuple[int, AlphaValue]] = []
    stopped_by = "max_level"
    for level in range(policy.start_level, policy.max_level + 1):
        a = eval_level(level)
        if trace:
            _certify_step(trace[-1][1], a)
            if abs(a.value - trace[-1][1].value) < policy.stop_delta:
                trace.append((level, a))
                stopped_by = "delta"
                break
        trace.append((level, a))
    return trace, stopped_by


def extrapolate_sqrt_gap(trace: Sequence[tuple[int, AlphaValue]]) -> float:
    """Richardson step in sqrt(grid gap) from the last two refinement levels.

    With values v = v_inf + c * gap^(1/2) the combination
    (v_L - r v_{L-1}) / (1 - r), r = sqrt(gap_L / gap_{L-1}), cancels the
    leading term.  A heuristic, not a theorem; off by default.
    """
    if len(trace) < 2:
        return trace[-1][1].value
    (lp, ap), (lc, ac) = trace[-2], trace[-1]
    r = math.sqrt(2.0 ** -(lc - lp))
    ext = (ac.value - r * ap.value) / (1.0 - r)
    return min(max(ext, 0.0), ac.value)


def _finalize(trace, stopped_by, policy, mc_check) -> MeasureEstimate:
    value = extrapolate_sqrt_gap(trace) if policy.extrapolate else trace[-1][1].value
    return MeasureEstimate(value, tuple(trace), stopped_by, mc_check, True)


def phi_band(b: BandSet, policy: RefinementPolicy = RefinementPolicy(),
             cfg: QuadratureConfig = QuadratureConfig(),
             mc: McConfig | None = None) -> MeasureEstimate:
    """Refinement limit of the band's projected cylinder measures."""
    breakpoints = b.breakpoints()

    def eval_level(level: int) -> AlphaValue:
        grid = merge_with(grid_at_level(level), breakpoints)
        return alpha_expr(BandExpr(b), grid, cfg)

    trace, stopped_by = _refine(eval_level, policy)
    mc_check = None
    if mc is not None:
        final_grid = trace[-1][1].grid
        mc_check = estimate_rectangle(project(b, final_grid), mc)
    return _finalize(trace, stopped_by, policy, mc_check)


def mu_expr(expr: SetExpr, policy: RefinementPolicy = RefinementPolicy(),
            cfg: QuadratureConfig = QuadratureConfig(),
            mc: McConfig | None = None) -> MeasureEstimate:
    """Measure of a set expression.

    Bands and unions run the refinement limit of their per-level values;
    a difference is mu(outer) - mu(inner), valid because inner is nested
    inside outer, with small negative noise clamped to 0.
    """
    if isinstance(expr, BandExpr):
        return phi_band(expr.band, policy, cfg, mc)
    if isinstance(expr, UnionExpr):
        breakpoints = expr.breakpoints()

        def eval_level(level: int) -> AlphaValue:
            grid = merge_with(grid_at_level(level), breakpoints)
            return alpha_expr(expr, grid, cfg)

        trace, stopped_by = _refine(eval_level, policy)
        mc_check = None
        if mc is not None:
            final_grid = trace[-1][1].grid
            rects = [project(b, final_grid) for b in expr.members]
            mc_check = estimate_rectangles_union(rects, mc)
        return _finalize(trace, stopped_by, policy, mc_check)
    if isinstance(expr, DifferenceExpr):
        outer = phi_band(expr.outer, policy, cfg, mc)
        inner = phi_band(expr.inner, policy, cfg)
        value = outer.value - inner.value
        if value < 0.0:
            tol = 2.0 * policy.stop_delta + \
                sum(a.est_quadrature_error for _, a in outer.alpha_trace[-1:]) + \
                sum(a.est_quadrature_error for _, a in inner.alpha_trace[-1:])
            if value < -tol:
                warnings.warn(
                    f"difference measure {value} below -{tol}; clamped to 0",
                    RuntimeWarning)
            value = 0.0
        levels = min(len(outer.alpha_trace), len(inner.alpha_trace))
        trace = tuple(
            (outer.alpha_trace[i][0],
             AlphaValue(max(outer.alpha_trace[i][1].value -
                            inner.alpha_trace[i][1].value, 0.0),
                        outer.alpha_trace[i][1].grid,
                        outer.alpha_trace[i][1].est_quadrature_error +
                        inner.alpha_trace[i][1].est_quadrature_error))
            for i in range(levels))
        stopped = outer.stopped_by
        return MeasureEstimate(value, trace, stopped, outer.mc_cross_check,
                               outer.monotone_certified and inner.monotone_certified)
    raise DomainError(f"unknown set expression {expr!r}")


# ---------------------------------------------------------------------------
# closed-form oracles (external ground truth, independent of the pipeline)

def oracle_one_sided(a: float) -> float:
    """P(sup_{0<=t<=1} W_t <= a) = 2 Phi(a) - 1, by the reflection principle."""
    if not a > 0.0:
        raise DomainError("one-sided barrier level must be positive")
    return math.erf(a / math.sqrt(2.0))


def oracle_two_sided(a: float, tol: float = 1e-12) -> float:
    """P(sup_{0<=t<=1} |W_t| <= a) by the alternating barrier series.

    Sum_{k} (-1)^k [Phi((2k+1)a) - Phi((2k-1)a)], truncated when the next
    term drops below tol.
    """
    if not a > 0.0:
        raise DomainError("two-sided barrier level must be positive")

    def Phi(z):
        return 0.5 * math.erfc(-z / math.sqrt(2.0))

    total = 2.0 * Phi(a) - 1.0
    k = 1
    while True:
        term = 2.0 * (Phi((2 * k + 1) * a) - Phi((2 * k - 1) * a))
        total += term if k % 2 == 0 else -term
        if abs(term) < tol or k > 64:
            break
        k += 1
    return max(total, 0.0)


# ---------------------------------------------------------------------------
# continuity suites

@dataclass(frozen=True)
class ContinuityReport:
    values: tuple[float, ...]
    direction: str
    monotone_ok: bool
    violations: tuple[int, ...]
    limit_value: float | None
    limit_estimate: float | None
    limit_gap: float | None


def continuity_suite(family: Sequence[BandSet], policy: RefinementPolicy,
                     cfg: QuadratureConfig, direction: str = "down",
                     limit_band: BandSet | None = None,
                     params: Sequence[float] | None = None) -> ContinuityReport:
    """Monotone behaviour of the measure along a nested band family.

    `family` must be ordered so the sets shrink ("down") or grow ("up").
    When `params` gives the family parameter (e.g. widths 1/k tending to
    0), the family limit is estimated by quadratic extrapolation in the
    parameter through the last three members and compared against the
    limit band's measure.
    """
    if direction not in ("down", "up"):
        raise DomainError("direction must be 'down' or 'up'")
    estimates = [phi_band(b, policy, cfg) for b in family]
    values = [e.value for e in estimates]
    violations = []
    for i in range(1, len(values)):
        slack = 1e-9
        slack += 2.0 * (estimates[i - 1].alpha_trace[-1][1].est_quadrature_error +
                        estimates[i].alpha_trace[-1][1].est_quadrature_error)
        step = values[i] - values[i - 1]
        if (direction == "down" and step > slack) or \
           (direction == "up" and step < -slack):
            violations.append(i)
    limit_value = limit_estimate = limit_gap = None
    if limit_band is not None:
        limit_value = phi_band(limit_band, policy, cfg).value
        if params is not None and len(values) >= 3:
            limit_estimate = _extrapolate_to_zero(params[-3:], values[-3:])
        else:
            limit_estimate = values[-1]
        limit_gap = abs(limit_estimate - limit_value)
    return ContinuityReport(tuple(values), direction, not violations,
                            tuple(violations), limit_value, limit_estimate,
                            limit_gap)


def _extrapolate_to_zero(params: Sequence[float], values: Sequence[float]) -> float:
    """Value at parameter 0 of the quadratic through three (param, value) points."""
    (x0, x1, x2), (y0, y1, y2) = params, values
    l0 = (x1 * x2) / ((x0 - x1) * (x0 - x2))
    l1 = (x0 * x2) / ((x1 - x0) * (x1 - x2))
    l2 = (x0 * x1) / ((x2 - x0) * (x2 - x1))
    return y0 * l0 + y1 * l1 + y2 * l2
