"""Self-contained acceptance suite.

Each criterion is a function returning a CriterionResult; the CLI `verify`
subcommand runs them, prints one deterministic PASS/FAIL line per
criterion to stdout, and writes an optional JSON report.  Wall-clock
diagnostics go to stderr only, so stdout and the report are byte-identical
across runs and worker counts for a fixed seed.

Random bands/paths are generated from a seeded PCG64 stream that is
independent of the Monte Carlo Philox streams.
"""

from __future__ import annotations

import hashlib
import io
import json
import math
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .alpha_engine import QuadratureConfig, alpha_expr, alpha_rectangle
from .gaussians import MinCovariance
from .measure_engine import (RefinementPolicy, continuity_suite,
                             extrapolate_sqrt_gap, mu_expr, oracle_one_sided,
                             oracle_two_sided, phi_band)
from .mc_oracle import (McConfig, estimate_rectangle, sample_path_bridge,
                        sample_vector)
from .pathsets import (BandExpr, BandSet, PiecewisePath, Rectangle, band,
                       contains, pl_constant, pl_points, project,
                       structural_relation_check)
from .setspecs import setspec_path
from .pathsets import load_setspec
from .timegrid import grid_at_level, merge_with

INF = math.inf
F = Fraction


@dataclass
class CriterionResult:
    num: int
    slug: str
    passed: bool
    details: str
    metrics: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# seeded generators shared by criteria and module tests

_DYADIC16 = [F(k, 16) for k in range(1, 16)]


def _random_bound(rng, base: float, is_lower: bool):
    if rng.random() < 0.5:
        return pl_constant(base)
    k = int(rng.integers(1, 4))
    inner = sorted(rng.choice(len(_DYADIC16), size=k, replace=False).tolist())
    ts = [F(0)] + [_DYADIC16[i] for i in inner] + [F(1)]
    vals = base + rng.uniform(-0.45, 0.45, size=len(ts))
    # keep the band open at t=0 (memberships pin x(0)=0)
    vals[0] = min(vals[0], -0.05) if is_lower else max(vals[0], 0.05)
    return pl_points(list(zip(ts, vals.tolist())))


def random_band(rng) -> BandSet:
    """A nonempty random band: constant or piecewise-linear bounds, possibly
    one-sided, breakpoints on the level-4 dyadic lattice.

    Base levels keep lower <= -0.15 < 0.15 <= upper everywhere after
    jitter, so the band is never empty.
    """
    style = rng.random()
    lo_base = float(rng.uniform(-2.5, -0.6))
    hi_base = float(rng.uniform(0.6, 2.5))
    lower = pl_constant(-INF) if style < 0.2 else _random_bound(rng, lo_base, True)
    upper = pl_constant(INF) if style >= 0.8 else _random_bound(rng, hi_base, False)
    return BandSet(lower, upper)


def random_path(rng, max_denominator: int = 16) -> PiecewisePath:
    k = int(rng.integers(2, 6))
    inner = sorted(rng.choice(max_denominator - 1, size=k, replace=False).tolist())
    ts = [F(0)] + [F(i + 1, max_denominator) for i in inner] + [F(1)]
    vals = [0.0] + [float(rng.normal(0.0, 2.2) * math.sqrt(float(t)))
                    for t in ts[1:]]
    return PiecewisePath(pl_points(list(zip(ts, vals))))


def member_path(rng, b: BandSet) -> PiecewisePath:
    """A path constructed inside the band: values picked strictly between the
    bounds at the kink union, linear in between (both sides linear there)."""
    ts = {F(0), F(1)}
    ts.update(b.breakpoints())
    ts.update(F(int(rng.integers(1, 16)), 16) for _ in range(2))
    ts = sorted(ts)
    pts = []
    for t in ts:
        lo, hi = b.lower(t), b.upper(t)
        if t == 0:
            pts.append((t, 0.0))
            continue
        if math.isinf(lo) and math.isinf(hi):
            pts.append((t, float(rng.normal(0.0, 1.0))))
        elif math.isinf(lo):
            pts.append((t, hi - float(rng.uniform(0.05, 1.0))))
        elif math.isinf(hi):
            pts.append((t, lo + float(rng.uniform(0.05, 1.0))))
        else:
            theta = float(rng.uniform(0.15, 0.85))
            pts.append((t, lo + theta * (hi - lo)))
    return PiecewisePath(pl_points(pts))


def _dense_mvn_density(times: np.ndarray, grids: list[np.ndarray]) -> np.ndarray:
    """Joint density on a tensor grid via the dense covariance formula.

    Deliberately independent of the increments factorization: inverts
    min(t_i, t_j) directly (n <= 3 only).
    """
    sigma = np.minimum.outer(times, times)
    inv = np.linalg.inv(sigma)
    det = np.linalg.det(sigma)
    n = times.size
    mesh = np.meshgrid(*grids, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    quad = np.einsum("ki,ij,kj->k", pts, inv, pts)
    dens = np.exp(-0.5 * quad) / math.sqrt((2.0 * math.pi) ** n * det)
    return dens.reshape([g.size for g in grids])


def tensor_alpha_oracle(times, los, his, pts_per_axis: int = 257,
                        truncation: float = 10.0) -> float:
    """Brute-force tensor Simpson quadrature of the dense-formula density."""
    t = np.asarray([float(x) for x in times])
    bound = truncation * math.sqrt(t[-1])
    grids, weights = [], []
    for lo, hi in zip(los, his):
        a, b_ = max(lo, -bound), min(hi, bound)
        if a >= b_:
            return 0.0
        m = pts_per_axis if pts_per_axis % 2 == 1 else pts_per_axis + 1
        xs = np.linspace(a, b_, m)
        w = np.full(m, 2.0)
        w[1::2] = 4.0
        w[0] = w[-1] = 1.0
        w *= (xs[1] - xs[0]) / 3.0
        grids.append(xs)
        weights.append(w)
    dens = _dense_mvn_density(t, grids)
    for ax in range(len(grids) - 1, -1, -1):
        dens = np.tensordot(dens, weights[ax], axes=([ax], [0]))
    return float(dens)


# ---------------------------------------------------------------------------
# criteria

def criterion_01(ctx) -> CriterionResult:
    """Refinement traces of 50 seeded random bands are nonincreasing within
    twice the per-level quadrature-error estimates, levels 0..8."""
    rng = np.random.default_rng(ctx.seed)
    cfg = QuadratureConfig(space_points=384, truncation=6.0)
    policy = RefinementPolicy(0, 8, stop_delta=1e-300)
    t0 = time.perf_counter()
    worst = -INF
    violations = 0
    for _ in range(50):
        b = random_band(rng)
        est = phi_band(b, policy, cfg)
        trace = est.alpha_trace
        for (_, prev), (_, cur) in zip(trace, trace[1:]):
            slack = 2.0 * (prev.est_quadrature_error + cur.est_quadrature_error)
            excess = cur.value - prev.value - slack
            worst = max(worst, excess)
            if excess > 1e-12:
                violations += 1
    elapsed = time.perf_counter() - t0
    runtime_ok = elapsed < 60.0
    passed = violations == 0 and runtime_ok
    return CriterionResult(
        1, "monotone-alpha-trace", passed,
        f"bands=50 levels=0..8 violations={violations} "
        f"worst_excess={worst:.3e} runtime_ok={runtime_ok}",
        {"violations": violations, "worst_excess": worst,
         "runtime_ok": runtime_ok})


def _barrier_criterion(num, slug, make_band, oracle, ctx) -> CriterionResult:
    details = []
    metrics = {}
    passed = True
    for a in (0.5, 1.0, 2.0):
        t0 = time.perf_counter()
        est = phi_band(make_band(a), RefinementPolicy(0, 10, 1e-300),
                       QuadratureConfig(2048))
        elapsed = time.perf_counter() - t0
        target = oracle(a)
        plain = est.value
        ext = extrapolate_sqrt_gap(est.alpha_trace)
        above = plain > target
        plain_ok = above and abs(plain - target) <= 5e-3
        ext_ok = abs(ext - target) <= 1e-3
        runtime_ok = elapsed < 30.0
        passed = passed and plain_ok and ext_ok and runtime_ok
        details.append(f"a={a}: plain_gap={plain - target:+.2e} "
                       f"ok={plain_ok} ext_gap={ext - target:+.2e} "
                       f"ok={ext_ok} runtime_ok={runtime_ok}")
        metrics[f"a={a}"] = {"plain_gap": plain - target, "ext_gap": ext - target,
                             "above_oracle": above, "plain_ok": plain_ok,
                             "ext_ok": ext_ok, "runtime_ok": runtime_ok}
    return CriterionResult(num, slug, passed, "; ".join(details), metrics)


def criterion_02(ctx) -> CriterionResult:
    """One-sided barrier vs the reflection-principle closed form at level 10:
    above the oracle, within 5e-3 plain and 1e-3 extrapolated."""
    return _barrier_criterion(2, "one-sided-barrier",
                              lambda a: band(-INF, a), oracle_one_sided, ctx)


def criterion_03(ctx) -> CriterionResult:
    """Two-sided barrier vs the alternating series, same protocol."""
    return _barrier_criterion(3, "two-sided-barrier",
                              lambda a: band(-a, a), oracle_two_sided, ctx)


def criterion_04(ctx) -> CriterionResult:
    """Degenerate bands (lower == upper) give exactly 0 at every level."""
    cases = [
        band(0.0, 0.0),
        BandSet(pl_points([(0, 0.0), (F(1, 2), 0.7), (1, 0.3)]),
                pl_points([(0, 0.0), (F(1, 2), 0.7), (1, 0.3)])),
        band(0.5, 0.5),  # also empty at t=0: still exactly 0
    ]
    exact = True
    for b in cases:
        for level in range(9):
            grid = merge_with(grid_at_level(level), b.breakpoints())
            a = alpha_expr(BandExpr(b), grid)
            exact = exact and (a.value == 0.0) and (a.est_quadrature_error == 0.0)
        est = phi_band(b, RefinementPolicy(0, 8, 1e-300))
        exact = exact and est.value == 0.0
    return CriterionResult(4, "degenerate-bands-zero", exact,
                           f"cases={len(cases)} levels=0..8 all_exact={exact}",
                           {"all_exact": exact})


def criterion_05(ctx) -> CriterionResult:
    """Normalization: mu of the full space within 1e-8 of 1; mu of an empty
    band exactly 0."""
    full = mu_expr(load_setspec(setspec_path("full_space.json")),
                   RefinementPolicy(0, 8, 1e-9))
    empty = mu_expr(load_setspec(setspec_path("empty_band.json")),
                    RefinementPolicy(0, 8, 1e-9))
    gap = abs(full.value - 1.0)
    passed = gap <= 1e-8 and empty.value == 0.0
    return CriterionResult(5, "normalization", passed,
                           f"|mu(C)-1|={gap:.2e} mu(empty)={empty.value!r}",
                           {"full_gap": gap, "empty_exact": empty.value == 0.0})


def _disjoint_pair(rng) -> tuple[BandSet, BandSet]:
    """Bands whose bounds separate by >= 0.5 at t = 1 (and from t = 1/2 on);
    both contain paths from 0, meeting the t=0 pin with open bounds there."""
    sep = 0.5 + float(rng.uniform(0.0, 0.4))
    mid = float(rng.uniform(-0.4, 0.4))
    hi_a1 = mid - 0.5 * sep
    lo_b1 = mid + 0.5 * sep
    upper_a = pl_points([(0, float(rng.uniform(0.1, 0.5))),
                         (F(1, 2), hi_a1), (1, hi_a1)])
    lower_a = pl_constant(hi_a1 - float(rng.uniform(1.0, 3.0)))
    lower_b = pl_points([(0, float(rng.uniform(-0.5, -0.1))),
                         (F(1, 2), lo_b1), (1, lo_b1)])
    upper_b = pl_constant(lo_b1 + float(rng.uniform(1.0, 3.0)))
    return BandSet(lower_a, upper_a), BandSet(lower_b, upper_b)


def criterion_06(ctx) -> CriterionResult:
    """Finite additivity at level 8 for 10 seeded disjoint band pairs."""
    from .pathsets import UnionExpr, intersect
    rng = np.random.default_rng(ctx.seed + 6)
    policy = RefinementPolicy(8, 8, 1e-300)
    cfg = QuadratureConfig(space_points=384, truncation=6.0)
    worst = 0.0
    for _ in range(10):
        a, b_ = _disjoint_pair(rng)
        assert intersect(a, b_).is_empty
        mu_a = mu_expr(BandExpr(a), policy, cfg).value
        mu_b = mu_expr(BandExpr(b_), policy, cfg).value
        mu_ab = mu_expr(UnionExpr((a, b_)), policy, cfg).value
        worst = max(worst, abs(mu_ab - mu_a - mu_b))
    passed = worst <= 2e-3
    return CriterionResult(6, "disjoint-additivity", passed,
                           f"pairs=10 level=8 worst_gap={worst:.2e}",
                           {"worst_gap": worst})


def criterion_07(ctx) -> CriterionResult:
    """Oracle equivalence: dense tensor quadrature (n<=3) to 1e-6, and MC
    agreement within 3 combined errors for >=99 of 100 random band/level
    pairs at 1e6 samples."""
    # part A: dense tensor quadrature of the dense-covariance density
    rect_cases = [
        ((F(1),), (-1.0,), (1.0,)),
        ((F(1, 2),), (-INF,), (0.7,)),
        ((F(1, 4),), (-0.25,), (2.0,)),
        ((F(1, 2), F(1)), (-1.0, -1.0), (1.0, 1.0)),
        ((F(1, 4), F(3, 4)), (-INF, -0.5), (0.6, INF)),
        ((F(1, 2), F(3, 4)), (-2.0, -1.5), (0.3, 1.2)),
        ((F(1, 4), F(1, 2), F(3, 4)), (-1.0, -1.0, -1.0), (1.0, 1.0, 1.0)),
        ((F(1, 4), F(1, 2), F(1)), (-0.8, -INF, -1.4), (0.9, 1.1, 0.2)),
        ((F(1, 8), F(1, 2), F(7, 8)), (-INF, -0.7, -2.0), (0.4, INF, 1.5)),
    ]
    worst_a = 0.0
    for times, los, his in rect_cases:
        rect = Rectangle(times, los, his)
        val = alpha_rectangle(rect).value
        ref = tensor_alpha_oracle(times, los, his,
                                  pts_per_axis=4097 if len(times) == 1 else
                                  (1025 if len(times) == 2 else 257))
        worst_a = max(worst_a, abs(val - ref))
    part_a = worst_a <= 1e-6

    # part B: quadrature vs Monte Carlo on random band/level pairs
    rng = np.random.default_rng(ctx.seed + 7)
    agree = 0
    worst_z = 0.0
    for i in range(100):
        b = random_band(rng)
        level = int(rng.integers(0, 9))
        grid = merge_with(grid_at_level(level), b.breakpoints())
        a = alpha_expr(BandExpr(b), grid)
        mc = estimate_rectangle(project(b, grid),
                                McConfig(10**6, ctx.seed * 1000003 + i,
                                         ctx.workers))
        tol = 3.0 * (mc.std_error + a.est_quadrature_error)
        diff = abs(mc.p_hat - a.value)
        if diff <= tol:
            agree += 1
        if tol > 0:
            worst_z = max(worst_z, diff / tol * 3.0)
    part_b = agree >= 99
    passed = part_a and part_b
    return CriterionResult(
        7, "oracle-equivalence", passed,
        f"tensor_worst={worst_a:.2e} (<=1e-6: {part_a}); "
        f"mc_agree={agree}/100 worst_z={worst_z:.2f} (>=99: {part_b})",
        {"tensor_worst": worst_a, "mc_agree": agree, "worst_z": worst_z})


def criterion_08(ctx) -> CriterionResult:
    """Sample covariance matches min(t_i, t_j) within 4 standard errors at
    1e6 samples on the level-3 grid, for both samplers."""
    n = 10**6
    grid = grid_at_level(3).times
    t = np.array([float(x) for x in grid])
    target = MinCovariance(tuple(t)).matrix()
    se = np.sqrt((np.outer(t, t) + target ** 2) / n)

    x_inc = sample_vector(grid, n, ctx.seed, ctx.workers)
    s_inc = x_inc.T @ x_inc / n
    gap_inc = np.abs(s_inc - target) / se

    x_br = sample_path_bridge(3, n, ctx.seed + 1, ctx.workers)
    s_br = x_br.T @ x_br / n
    gap_cross = np.abs(s_br - s_inc) / (math.sqrt(2.0) * se)

    ok_inc = float(gap_inc.max()) <= 4.0
    ok_cross = float(gap_cross.max()) <= 4.0
    passed = ok_inc and ok_cross
    return CriterionResult(
        8, "covariance-agreement", passed,
        f"increment_max_z={gap_inc.max():.2f} bridge_vs_increment_max_z="
        f"{gap_cross.max():.2f} (both <= 4)",
        {"increment_max_z": float(gap_inc.max()),
         "cross_max_z": float(gap_cross.max())})


def criterion_09(ctx) -> CriterionResult:
    """Projection/preimage identity: structural_relation_check agrees with
    contains for 100 seeded (band, path) pairs up to level 10."""
    rng = np.random.default_rng(ctx.seed + 9)
    inconsistent = 0
    members = 0
    for i in range(100):
        b = random_band(rng)
        path = member_path(rng, b) if i % 2 == 0 else random_path(rng)
        report = structural_relation_check(b, path, 10)
        if report.member:
            members += 1
        if report.member != contains(b, path) or not report.consistent:
            inconsistent += 1
    passed = inconsistent == 0
    return CriterionResult(
        9, "structural-relation", passed,
        f"pairs=100 members={members} inconsistent={inconsistent}",
        {"members": members, "inconsistent": inconsistent})


def criterion_10(ctx) -> CriterionResult:
    """Continuity along nested band families at level 8."""
    policy = RefinementPolicy(8, 8, 1e-300)
    cfg = QuadratureConfig(1024)
    ks = [1, 2, 4, 8, 16]

    down = continuity_suite([band(-1 - 1 / k, 1 + 1 / k) for k in ks],
                            policy, cfg, "down", limit_band=band(-1.0, 1.0),
                            params=[1.0 / k for k in ks])
    shrink = continuity_suite([band(-1 / k, 1 / k) for k in ks],
                              policy, cfg, "down")
    up = continuity_suite([band(-float(k), float(k)) for k in (1, 2, 4, 8)],
                          policy, cfg, "up")

    down_ok = down.monotone_ok and down.limit_gap <= 2e-3
    shrink_ok = shrink.monotone_ok and shrink.values[-1] < 1e-2
    up_ok = up.monotone_ok and up.values[-1] > 1.0 - 1e-8
    passed = down_ok and shrink_ok and up_ok
    return CriterionResult(
        10, "continuity-suites", passed,
        f"widening-down: monotone={down.monotone_ok} limit_gap="
        f"{down.limit_gap:.2e}; shrink-degenerate: monotone="
        f"{shrink.monotone_ok} width-1/16 value={shrink.values[-1]:.2e}; "
        f"widening-up: monotone={up.monotone_ok} final={up.values[-1]!r}",
        {"down_limit_gap": down.limit_gap, "shrink_final": shrink.values[-1],
         "up_final": up.values[-1]})


def criterion_11(ctx) -> CriterionResult:
    """Determinism: identical results for any worker count, and identical
    rendered outputs for repeated runs."""
    from .cli import main as cli_main
    grid = grid_at_level(4).times
    rect = project(band(-1.0, 1.0), grid)
    p1 = estimate_rectangle(rect, McConfig(10**5, ctx.seed, 1)).p_hat
    p3 = estimate_rectangle(rect, McConfig(10**5, ctx.seed, 3)).p_hat
    vec_ok = (hashlib.sha256(sample_vector(grid, 70000, ctx.seed, 1).tobytes()).hexdigest()
              == hashlib.sha256(sample_vector(grid, 70000, ctx.seed, 3).tobytes()).hexdigest())
    br_ok = (hashlib.sha256(sample_path_bridge(4, 70000, ctx.seed, 1).tobytes()).hexdigest()
             == hashlib.sha256(sample_path_bridge(4, 70000, ctx.seed, 3).tobytes()).hexdigest())

    def run_cli(workers):
        buf = io.StringIO()
        stdout, sys.stdout = sys.stdout, buf
        try:
            code = cli_main(["converge", "--set", setspec_path("onesided_a10.json"),
                             "--levels", "0..3", "--samples", "20000",
                             "--seed", str(ctx.seed), "--workers", str(workers)])
        finally:
            sys.stdout = stdout
        return code, buf.getvalue()

    c1, out1 = run_cli(1)
    c2, out2 = run_cli(2)
    csv_ok = c1 == c2 == 0 and out1 == out2
    passed = (p1 == p3) and vec_ok and br_ok and csv_ok
    return CriterionResult(
        11, "determinism", passed,
        f"p_hat_equal={p1 == p3} vectors_equal={vec_ok} bridge_equal={br_ok} "
        f"csv_equal={csv_ok}",
        {"p_hat_equal": p1 == p3, "vectors_equal": vec_ok,
         "bridge_equal": br_ok, "csv_equal": csv_ok})


CRITERIA = {
    1: criterion_01, 2: criterion_02, 3: criterion_03, 4: criterion_04,
    5: criterion_05, 6: criterion_06, 7: criterion_07, 8: criterion_08,
    9: criterion_09, 10: criterion_10, 11: criterion_11,
}


@dataclass(frozen=True)
class VerifyContext:
    seed: int
    workers: int


def run_criterion(num: int, seed: int = 42, workers: int = 1) -> CriterionResult:
    if num not in CRITERIA:
        raise KeyError(f"no criterion {num}")
    return CRITERIA[num](VerifyContext(seed, workers))


def run_verify(seed: int = 42, workers: int = 1, criteria=None,
               out: str | None = None) -> int:
    nums = sorted(criteria) if criteria else sorted(CRITERIA)
    for n in nums:
        if n not in CRITERIA:
            print(f"error: no criterion {n}", file=sys.stderr)
            return 2
    ctx = VerifyContext(seed, workers)
    results = []
    for n in nums:
        t0 = time.perf_counter()
        res = CRITERIA[n](ctx)
        elapsed = time.perf_counter() - t0
        results.append(res)
        print(f"[{'PASS' if res.passed else 'FAIL'}] {res.num:02d} "
              f"{res.slug}: {res.details}")
        print(f"# criterion {n} took {elapsed:.1f}s", file=sys.stderr)
    all_passed = all(r.passed for r in results)
    if out:
        report = {
            "seed": seed,
            "workers": workers,
            "criteria": [
                {"num": r.num, "slug": r.slug, "passed": r.passed,
                 "details": r.details, "metrics": r.metrics}
                for r in results
            ],
            "all_passed": all_passed,
        }
        with open(out, "w", encoding="utf-8") as fh:
            json.dump(report, fh, sort_keys=True, indent=2)
            fh.write("\n")
    return 0 if all_passed else 1
