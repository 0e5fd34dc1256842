"""Command-line front end.

Exit codes: 0 on success (including scientifically inconsistent results,
which are reported, not raised), 1 on invalid input, 2 when a numeric
pipeline fails (sampling budget exhausted, stencil or chart failure).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import combinatorics as comb
from .geometry import GeometryError
from .invariants import (
    PathSpec,
    chen_tian,
    invariant_report,
    kenergy,
    kenergy_slope_check,
)
from .manifest import load_manifest
from .montecarlo import BudgetExhausted, McEstimate, SamplePlan, calibrate
from .polynomials import ValidationError
from .report import ReportOptions, build_report, dumps, estimate, normalization_warning
from .verify import verify

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def fmt(e: McEstimate) -> str:
    return f"{complex(e.mean).real:.6g} +/- {e.stderr:.3g}"


def _manifest(args):
    man = load_manifest(args.manifest)
    if man.normalized:
        print(f"warning: {normalization_warning(man)}", file=sys.stderr)
    return man


def _plan(args) -> SamplePlan:
    return SamplePlan(args.samples, base_seed=args.seed, workers=args.workers, method=args.method)


def _emit(args, payload: dict, lines: list[str]) -> None:
    if getattr(args, "json", False):
        sys.stdout.write(dumps(payload))
    else:
        print("\n".join(lines))


def cmd_alpha(args) -> int:
    if args.q < 0:
        raise comb.DomainError("q must be non-negative")
    row = comb.alpha_table(args.n, args.d, args.q).rows[args.q]
    print(", ".join(comb.format_rational(x) for x in row))
    return EXIT_OK


def cmd_invariant(args) -> int:
    man = _manifest(args)
    numeric = args.route in ("numeric", "all")
    rep = invariant_report(man.polynomial, man.field, args.q, _plan(args) if numeric else None)
    values = {
        "closed": comb.format_rational(rep.closed),
        "coeff": comb.format_rational(rep.coeff_route),
    }
    if numeric:
        values["numeric"] = fmt(rep.numeric)
    if args.route != "all":
        lines = [values[args.route]]
    else:
        lines = [f"{k}: {v}" for k, v in values.items()]
        lines.append(f"lambda_q: {fmt(rep.lambda_q)} (exact {comb.format_rational(rep.lambda_exact)})")
        lines.append(f"consistent: {str(rep.consistent).lower()}")
    payload = {
        "q": args.q,
        "kappa": comb.format_rational(rep.kappa),
        "closed": values["closed"],
        "coeff_route": values["coeff"],
        "numeric": estimate(rep.numeric),
        "lambda_q": estimate(rep.lambda_q),
        "consistent": rep.consistent,
    }
    _emit(args, payload, lines)
    return EXIT_OK


def cmd_verify(args) -> int:
    man = _manifest(args)
    rep = verify(man.polynomial, man.field, args.points, args.seed, fd=args.fd)
    lines = [f"{rep.points} points, {rep.rejected} rejected" + (f", fd on {rep.fd_points} ({rep.fd_skipped} skipped)" if args.fd else "")]
    for c in rep.checks:
        lines.append(f"{'PASS' if c.passed else 'FAIL'}  {c.name:<24} worst {c.worst:.3e}  tol {c.tolerance:.0e}")
    lines.append(f"{len(rep.checks) - len(rep.failures)}/{len(rep.checks)} checks passed")
    _emit(args, rep.to_dict(), lines)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    man = _manifest(args)
    c = calibrate(man.polynomial, man.field, _plan(args))
    lines = [
        f"volume      {fmt(c.degree)}  (exact {c.degree_exact})",
        f"hamiltonian {fmt(c.hamiltonian)}  (exact {comb.format_rational(man.field.kappa / man.n)})",
        f"kappa range [{c.kappa_min:.12g}, {c.kappa_max:.12g}]  (exact {comb.format_rational(man.field.kappa)})",
        f"passed: {str(c.passed).lower()}",
    ]
    payload = {"degree": estimate(c.degree), "hamiltonian": estimate(c.hamiltonian),
               "kappa_min": c.kappa_min, "kappa_max": c.kappa_max, "passed": c.passed}
    _emit(args, payload, lines)
    return EXIT_OK


def cmd_chen_tian(args) -> int:
    man = _manifest(args)
    r = chen_tian(man.polynomial, man.field, args.k, _plan(args))
    f1 = comb.bando_futaki_closed(man.n, man.polynomial.d, 1, man.field.kappa)
    lines = [
        f"F_{args.k}         {fmt(r.value)}",
        f"F_{args.k}/(k+1)   {fmt(r.ratio)}  (F_1 exact {comb.format_rational(f1)})",
        f"laplacian term {fmt(r.laplacian_term)}",
    ]
    payload = {"k": args.k, "value": estimate(r.value), "ratio": estimate(r.ratio),
               "laplacian_term": estimate(r.laplacian_term), "f1_exact": comb.format_rational(f1)}
    _emit(args, payload, lines)
    return EXIT_OK


def cmd_kenergy(args) -> int:
    man = _manifest(args)
    kind = "automorphism" if args.path == "auto" else "linear"
    try:
        path = PathSpec(kind, args.t_end, args.t_steps)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    plan = _plan(args)
    r = kenergy(man.polynomial, man.field, args.q, path, plan)
    s = kenergy_slope_check(man.polynomial, man.field, args.q, plan)
    lines = [
        f"M_{args.q} along {kind} path to t = {args.t_end}: {fmt(r.value)}",
        f"slope check: (m+1-q) dM/dt = {fmt(s.lhs)} vs (2/V) F_q = {s.rhs:.6g}  passed: {str(s.passed).lower()}",
    ]
    payload = {"q": args.q, "path": kind, "t_end": args.t_end, "t_steps": args.t_steps, "value": estimate(r.value),
               "slope_lhs": estimate(s.lhs), "slope_rhs": s.rhs, "slope_passed": s.passed}
    _emit(args, payload, lines)
    return EXIT_OK


def cmd_report(args) -> int:
    man = _manifest(args)
    opts = ReportOptions(
        samples=args.samples, seed=args.seed, workers=args.workers, method=args.method, numeric=args.all,
        verify_points=args.points, fd=not args.no_fd, kenergy_samples=args.kenergy_samples,
    )
    text = dumps(build_report(man, opts))
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hyperfutaki", description="Bando-Futaki invariants of projective hypersurfaces.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def mc_flags(sp, samples: int = 20000):
        sp.add_argument("--samples", type=int, default=samples)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--method", choices=("line", "chart"), default="line")

    def manifest_flag(sp):
        sp.add_argument("--manifest", required=True, help="manifest path or bundled name (cubic, example22, quadric, hyperplane)")
        sp.add_argument("--json", action="store_true", help="print JSON instead of text")

    sp = sub.add_parser("alpha", help="exact alpha row")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--q", type=int, required=True)
    sp.set_defaults(func=cmd_alpha)

    sp = sub.add_parser("invariant", help="F_q by the exact and numeric routes")
    manifest_flag(sp)
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--route", choices=("closed", "coeff", "numeric", "all"), default="all")
    mc_flags(sp)
    sp.set_defaults(func=cmd_invariant)

    sp = sub.add_parser("verify", help="pointwise identity suite")
    manifest_flag(sp)
    sp.add_argument("--points", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--fd", action="store_true", help="also compare against finite differences")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("calibrate", help="volume and Hamiltonian integrals")
    manifest_flag(sp)
    mc_flags(sp)
    sp.set_defaults(func=cmd_calibrate)

    sp = sub.add_parser("chen-tian", help="Chen-Tian invariant F_k")
    manifest_flag(sp)
    sp.add_argument("--k", type=int, default=0)
    mc_flags(sp)
    sp.set_defaults(func=cmd_chen_tian)

    sp = sub.add_parser("kenergy", help="K-energy along a path of metrics")
    manifest_flag(sp)
    sp.add_argument("--q", type=int, default=1)
    sp.add_argument("--path", choices=("auto", "linear"), default="auto")
    sp.add_argument("--t-end", type=float, default=0.2)
    sp.add_argument("--t-steps", type=int, default=5)
    mc_flags(sp, samples=4096)
    sp.set_defaults(func=cmd_kenergy)

    sp = sub.add_parser("report", help="full JSON report")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--all", action="store_true", help="include every Monte Carlo pipeline")
    sp.add_argument("-o", "--output")
    sp.add_argument("--points", type=int, default=1000)
    sp.add_argument("--no-fd", action="store_true")
    sp.add_argument("--kenergy-samples", type=int, default=4096)
    mc_flags(sp)
    sp.set_defaults(func=cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ValueError as exc:
        # ValidationError and DomainError are ValueErrors, as are SamplePlan's argument checks
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (BudgetExhausted, GeometryError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
