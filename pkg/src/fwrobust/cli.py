"""Command-line front end.

Exit codes: 0 success, 1 a reproduction check failed, 2 bad input or gauge,
3 violated precondition, 4 internal invariant failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import io, reproduce
from .cells import elementary_hull, enumerate_cells
from .contamination import contamination_locus
from .errors import GaugeError, InputError, InvariantError, PreconditionError
from .gauges import TOL, PolyhedralGauge
from .lp import LPError
from .robustness import (
    breakdown_estimate,
    escape_experiment,
    greedy_subset,
    kappa_bound,
    threshold,
    verify_lower_bound,
)
from .solver import solve_fw_lp, solve_fw_subgradient
from .svg import render_complex

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_PRECONDITION, EXIT_INVARIANT = 0, 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--gauge", metavar="FILE", help="gauge descriptor JSON")
    p.add_argument("--sample", metavar="FILE", help="sample CSV with header x1,...,xd,weight")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized experiments (default 0)")
    p.add_argument("--out", metavar="DIR", help="also write outputs into this directory")
    p.add_argument("--tol", type=float, default=TOL, help=f"activity tolerance (default {TOL:g})")
    p.add_argument("--threads", type=int, default=1, help="worker threads for trials and grids")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="fwrobust", description="Fermat-Weber points under gauges and their robustness.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("gauge-info", parents=[common], help="print dimension, vertices, skewness and dual")

    p = sub.add_parser("solve", parents=[common], help="solve the weighted Fermat-Weber problem")
    p.add_argument("--iters", type=int, default=10_000, help="iterations for black-box gauges")

    p = sub.add_parser("robust", parents=[common], help="corruption experiments")
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--fraction", type=float, help="corrupt this fraction of the weight (greedy subset)")
    mode.add_argument("--kappa", type=float, metavar="W_C", help="kappa bound for corrupted weight W_C")
    mode.add_argument("--breakdown", action="store_true", help="estimate the breakdown point by bisection")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--resolution", type=float, default=0.01)

    p = sub.add_parser("hull", parents=[common], help="elementary hull or contamination locus")
    which = p.add_mutually_exclusive_group(required=True)
    which.add_argument("--ehull", action="store_true")
    which.add_argument("--cl", action="store_true")
    p.add_argument("--svg", metavar="FILE", help="write an SVG drawing (planar samples)")

    p = sub.add_parser("reproduce", parents=[common], help="run a named worked-example check")
    p.add_argument("example", choices=sorted(reproduce.REGISTRY))
    p.add_argument("--rho", type=float, default=1.0, help="distance factor for euclid-3pt")
    return parser


def _need(args, *names) -> None:
    for n in names:
        if getattr(args, n) is None:
            raise InputError(f"--{n} is required for {args.command}")


def _polyhedral(g) -> PolyhedralGauge:
    if not isinstance(g, PolyhedralGauge):
        raise InputError("this command needs a polyhedral gauge")
    return g


def _emit(args, name: str, payload: dict, text: str | None = None) -> None:
    out = io.dumps(payload)
    sys.stdout.write(text if text is not None else out)
    if args.out:
        d = Path(args.out)
        d.mkdir(parents=True, exist_ok=True)
        (d / f"{name}.json").write_text(out, encoding="utf-8")


def cmd_gauge_info(args) -> int:
    _need(args, "gauge")
    g = io.load_gauge(args.gauge)
    if isinstance(g, PolyhedralGauge):
        info = {
            "name": g.name,
            "dim": g.dim,
            "primal_vertices": len(g.primal_vertices),
            "dual_vertices": len(g.dual_vertices),
            "sigma": g.skewness,
            "breakdown_point": threshold(g),
            "is_norm": g.is_norm,
            "skew_dirs": g.skew_dirs,
            "dual": g.dual().descriptor(),
        }
    else:
        info = {"name": g.name, "dim": g.dim, "sigma": g.skewness, "breakdown_point": threshold(g), "black_box": True}
    _emit(args, "gauge-info", info)
    return EXIT_OK


def cmd_solve(args) -> int:
    _need(args, "gauge", "sample")
    g = io.load_gauge(args.gauge)
    s = io.load_sample(args.sample)
    if isinstance(g, PolyhedralGauge):
        sol = solve_fw_lp(g, s, check_unique=True, tol=args.tol)
    else:
        sol = solve_fw_subgradient(g, s, iters=args.iters, tol=args.tol)
    _emit(args, "solve", sol.to_json())
    return EXIT_OK


def cmd_robust(args) -> int:
    _need(args, "gauge", "sample")
    g = _polyhedral(io.load_gauge(args.gauge))
    s = io.load_sample(args.sample)
    a_star = solve_fw_lp(g, s, tol=args.tol).optimizer
    if args.breakdown:
        b = breakdown_estimate(g, s, args.resolution)
        payload = {
            "estimate": b.estimate,
            "bracket": [b.lo, b.hi],
            "threshold": b.threshold,
            "granularity": b.granularity,
            "brackets_threshold": b.brackets,
            "steps": [{"fraction": t, "escaped": e} for t, e in b.steps],
        }
        _emit(args, "breakdown", payload)
        return EXIT_OK
    if args.kappa is not None:
        k = kappa_bound(g, s, args.kappa, a_star)
        _emit(args, "kappa", {"w_C": args.kappa, "a_star": a_star, "sigma": g.skewness, "kappa": k})
        return EXIT_OK
    if not 0 < args.fraction <= 1:
        raise InputError("--fraction must lie in (0, 1]")
    C = greedy_subset(g, s, args.fraction, a_star)
    w_C = s.subset_weight(C)
    if (1 + g.skewness) * w_C < s.total_weight:
        rep = verify_lower_bound(g, s, C, args.trials, args.seed, args.threads)
        payload = {"corrupted": C, "w_C": w_C, **rep.to_json()}
        _emit(args, "robust", payload)
        return EXIT_OK if rep.verdict == "pass" else EXIT_INVARIANT
    res = escape_experiment(g, s, C, a_star=a_star)
    payload = {
        "corrupted": C,
        "w_C": w_C,
        "threshold": threshold(g),
        "radius": res.radius,
        "escaped": res.escaped,
        "M_found": res.M_found,
        "trace": [{"M": M, "distance": d} for M, d in res.trace],
    }
    _emit(args, "escape", payload)
    if args.out:
        (Path(args.out) / "escape_trace.csv").write_text(res.trace_csv(), encoding="utf-8")
    return EXIT_OK


def cmd_hull(args) -> int:
    _need(args, "gauge", "sample")
    g = _polyhedral(io.load_gauge(args.gauge))
    s = io.load_sample(args.sample)
    cells = enumerate_cells(g, s.points, args.tol)
    eh = elementary_hull(g, s.points, cells)
    if args.ehull:
        payload = eh.to_json()
        payload["hull_vertices"] = eh.hull_vertices()
        if g.dim == 1:
            payload["interval"] = list(eh.interval())
        locus = None
    else:
        cl = contamination_locus(g, s, tol=args.tol, threads=args.threads)
        payload = cl.to_json()
        if g.dim == 1:
            payload["interval"] = list(cl.region.interval())
        locus = cl.region
    if args.svg:
        if g.dim != 2:
            raise InputError("--svg needs a planar sample")
        Path(args.svg).write_text(render_complex(s.merged(), cells, eh, locus), encoding="utf-8")
    _emit(args, "ehull" if args.ehull else "cl", payload)
    return EXIT_OK


def cmd_reproduce(args) -> int:
    rep = reproduce.run(args.example, rho=args.rho, seed=args.seed)
    _emit(args, f"reproduce-{args.example}", rep.to_json(), text="\n".join(rep.lines()) + "\n")
    return EXIT_OK if rep.passed else EXIT_FAIL


COMMANDS = {
    "gauge-info": cmd_gauge_info,
    "solve": cmd_solve,
    "robust": cmd_robust,
    "hull": cmd_hull,
    "reproduce": cmd_reproduce,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_INPUT
    try:
        return COMMANDS[args.command](args)
    except (InputError, GaugeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except PreconditionError as exc:
        print(f"precondition violated: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (InvariantError, LPError) as exc:
        print(f"internal invariant failed: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
