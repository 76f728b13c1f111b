"""Command-line front end.

Subcommands: estimate (one measure with its refinement trace), converge
(per-level CSV table), verify (the acceptance suite), sample (vectors or
bridge paths as CSV), oracle (closed-form barrier values).

Exit codes: 0 success, 1 verify-suite failure, 2 malformed input,
3 internal-consistency failure.  All output is deterministic given the
seed and flags; wall-clock timings only appear when requested
(`converge --timings`) or on stderr (`verify`).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction

from .alpha_engine import QuadratureConfig, alpha_expr
from .errors import DomainError, InternalConsistencyError, PreconditionError
from .measure_engine import (RefinementPolicy, mu_expr, oracle_one_sided,
                             oracle_two_sided)
from .mc_oracle import (McConfig, estimate_rectangle,
                        estimate_rectangle_difference,
                        estimate_rectangles_union, sample_path_bridge,
                        sample_vector)
from .pathsets import (BandExpr, DifferenceExpr, SetExpr, UnionExpr,
                       load_setspec, project)
from .timegrid import grid_at_level, merge_with

CONVERGE_COLUMNS = ("level", "n_times", "alpha", "delta_prev", "quad_err",
                    "mc_phat", "mc_se", "runtime_ms")


def _parse_levels(text: str) -> tuple[int, int]:
    try:
        if ".." in text:
            a, b = text.split("..")
            return int(a), int(b)
        single = int(text)
        return single, single
    except ValueError:
        raise DomainError(f"cannot parse --levels {text!r}; use A..B or a single level")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wienerband",
                                description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def add_quadrature(sp):
        sp.add_argument("--space-points", type=int, default=1024)
        sp.add_argument("--truncation", type=float, default=10.0)

    def add_policy(sp):
        sp.add_argument("--levels", default="0..10",
                        help="refinement range A..B (or a single level)")
        sp.add_argument("--stop-delta", type=float, default=1e-4)
        sp.add_argument("--extrapolate", action="store_true")

    def add_mc(sp):
        sp.add_argument("--samples", type=int, default=0,
                        help="Monte Carlo cross-check sample count (0 = off)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--workers", type=int, default=1)

    def add_out(sp):
        sp.add_argument("--out", default="-", help="output path, - for stdout")

    sp = sub.add_parser("estimate", help="measure of a set expression")
    sp.add_argument("--set", required=True, dest="set_path")
    add_policy(sp)
    add_quadrature(sp)
    add_mc(sp)
    sp.add_argument("--format", choices=("report", "csv"), default="report")
    add_out(sp)

    sp = sub.add_parser("converge", help="per-level convergence table (CSV)")
    sp.add_argument("--set", required=True, dest="set_path")
    add_policy(sp)
    add_quadrature(sp)
    add_mc(sp)
    sp.add_argument("--timings", action="store_true",
                    help="fill the runtime_ms column (breaks byte-identity)")
    add_out(sp)

    sp = sub.add_parser("verify", help="run the acceptance suite")
    sp.add_argument("--seed", type=int, default=42)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--criteria", default="",
                    help="comma-separated criterion numbers (default: all)")
    add_out(sp)

    sp = sub.add_parser("sample", help="write sampled vectors or paths as CSV")
    sp.add_argument("--levels", default="3", help="grid level (single integer)")
    sp.add_argument("--samples", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--bridge", action="store_true",
                    help="bridge midpoint-refinement paths instead of vectors")
    add_out(sp)

    sp = sub.add_parser("oracle", help="closed-form boundary-crossing values")
    group = sp.add_mutually_exclusive_group(required=True)
    group.add_argument("--one-sided", type=float, default=None)
    group.add_argument("--two-sided", type=float, default=None)

    return p


def _write(out_path: str, text: str):
    if out_path == "-":
        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def _mc_for_expr(expr: SetExpr, grid, mc_cfg: McConfig):
    if isinstance(expr, BandExpr):
        return estimate_rectangle(project(expr.band, grid), mc_cfg)
    if isinstance(expr, UnionExpr):
        return estimate_rectangles_union(
            [project(b, grid) for b in expr.members], mc_cfg)
    if isinstance(expr, DifferenceExpr):
        return estimate_rectangle_difference(
            project(expr.outer, grid), project(expr.inner, grid), mc_cfg)
    raise DomainError(f"unknown set expression {expr!r}")


def cmd_estimate(args) -> int:
    expr = load_setspec(args.set_path)
    start, stop = _parse_levels(args.levels)
    policy = RefinementPolicy(start, stop, args.stop_delta, args.extrapolate)
    cfg = QuadratureConfig(args.space_points, args.truncation)
    mc = McConfig(args.samples, args.seed, args.workers) if args.samples else None
    est = mu_expr(expr, policy, cfg, mc)
    if args.format == "csv":
        header = "value,stopped_by,levels,final_quad_err,mc_phat,mc_se,monotone_certified"
        final_err = est.alpha_trace[-1][1].est_quadrature_error
        row = ",".join([
            _fmt(est.value), est.stopped_by, str(len(est.alpha_trace)),
            _fmt(final_err),
            _fmt(est.mc_cross_check.p_hat) if est.mc_cross_check else "",
            _fmt(est.mc_cross_check.std_error) if est.mc_cross_check else "",
            str(est.monotone_certified).lower(),
        ])
        _write(args.out, header + "\n" + row + "\n")
    else:
        report = {
            "command": "estimate",
            "set": args.set_path,
            "value": est.value,
            "stopped_by": est.stopped_by,
            "monotone_certified": est.monotone_certified,
            "alpha_trace": [
                {"level": lv, "alpha": a.value,
                 "quad_err": a.est_quadrature_error}
                for lv, a in est.alpha_trace
            ],
            "mc_cross_check": None if est.mc_cross_check is None else {
                "p_hat": est.mc_cross_check.p_hat,
                "std_error": est.mc_cross_check.std_error,
                "samples": est.mc_cross_check.samples,
                "seed": est.mc_cross_check.seed,
            },
            "policy": {"start_level": policy.start_level,
                       "max_level": policy.max_level,
                       "stop_delta": policy.stop_delta,
                       "extrapolate": policy.extrapolate},
            "quadrature": {"space_points": cfg.space_points,
                           "truncation": cfg.truncation, "rule": cfg.rule},
        }
        _write(args.out, json.dumps(report, sort_keys=True, indent=2) + "\n")
    return 0


def cmd_converge(args) -> int:
    expr = load_setspec(args.set_path)
    start, stop = _parse_levels(args.levels)
    cfg = QuadratureConfig(args.space_points, args.truncation)
    mc_cfg = McConfig(args.samples, args.seed, args.workers) if args.samples else None
    breakpoints = expr.breakpoints()
    rows = [",".join(CONVERGE_COLUMNS)]
    prev = None
    for level in range(start, stop + 1):
        t0 = time.perf_counter()
        grid = merge_with(grid_at_level(level), breakpoints)
        a = alpha_expr(expr, grid, cfg)
        mc = _mc_for_expr(expr, grid, mc_cfg) if mc_cfg else None
        ms = (time.perf_counter() - t0) * 1e3
        rows.append(",".join([
            str(level), str(len(grid)), _fmt(a.value),
            _fmt(prev - a.value) if prev is not None else "",
            _fmt(a.est_quadrature_error),
            _fmt(mc.p_hat) if mc else "",
            _fmt(mc.std_error) if mc else "",
            repr(round(ms, 3)) if args.timings else "",
        ]))
        prev = a.value
    _write(args.out, "\n".join(rows) + "\n")
    return 0


def cmd_sample(args) -> int:
    level, stop = _parse_levels(args.levels)
    if stop != level:
        raise DomainError("sample takes a single level, not a range")
    if args.bridge:
        data = sample_path_bridge(level, args.samples, args.seed, args.workers)
        n = data.shape[1]
        times = [Fraction(k, n) for k in range(1, n + 1)]
    else:
        grid = grid_at_level(level)
        times = list(grid.times)
        data = sample_vector(times, args.samples, args.seed, args.workers)
    header = ",".join(str(t) for t in times)
    lines = [header]
    for row in data:
        lines.append(",".join(repr(float(v)) for v in row))
    _write(args.out, "\n".join(lines) + "\n")
    return 0


def cmd_oracle(args) -> int:
    if args.one_sided is not None:
        value = oracle_one_sided(args.one_sided)
    else:
        value = oracle_two_sided(args.two_sided)
    sys.stdout.write(f"{value:.10f}\n")
    return 0


def cmd_verify(args) -> int:
    from . import verify
    criteria = None
    if args.criteria:
        try:
            criteria = [int(x) for x in args.criteria.split(",") if x.strip()]
        except ValueError:
            raise DomainError(f"cannot parse --criteria {args.criteria!r}")
    return verify.run_verify(seed=args.seed, workers=args.workers,
                             criteria=criteria,
                             out=None if args.out == "-" else args.out)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "estimate": cmd_estimate,
        "converge": cmd_converge,
        "sample": cmd_sample,
        "oracle": cmd_oracle,
        "verify": cmd_verify,
    }
    try:
        return handlers[args.command](args)
    except InternalConsistencyError as e:
        print(f"internal consistency failure: {e}", file=sys.stderr)
        return 3
    except (DomainError, PreconditionError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
