"""Machine-readable report assembling every pipeline for one manifest.

The document is plain JSON with sorted keys.  Exact values are rational
strings such as ``"-285/2"``; every Monte Carlo value carries its standard
error.  Nothing that depends on scheduling (worker count, timings) is
recorded, so equal inputs give byte-identical output.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

from . import combinatorics as comb
from .invariants import (
    chen_tian,
    invariant_report,
    kenergy_path_independence,
    kenergy_slope_check,
    polarization_integral,
)
from .manifest import Manifest
from .montecarlo import McEstimate, SamplePlan, calibrate
from .verify import verify

FORMAT_VERSION = 1


@dataclass(frozen=True)
class ReportOptions:
    samples: int = 20000
    seed: int = 0
    workers: int = 1
    method: str = "line"
    numeric: bool = False
    verify_points: int = 1000
    fd: bool = True
    kenergy_samples: int = 4096
    t_end: float = 0.2
    t_steps: int = 5

    def plan(self, samples: int | None = None) -> SamplePlan:
        return SamplePlan(samples or self.samples, base_seed=self.seed, workers=self.workers, method=self.method)


def rational(x) -> str:
    return comb.format_rational(Fraction(x))


def number(x: float):
    """JSON-safe float; non-finite values become strings."""
    x = float(x)
    return x if math.isfinite(x) else str(x)


def estimate(e: McEstimate | None) -> dict | None:
    if e is None:
        return None
    return {k: number(v) if isinstance(v, float) else v for k, v in e.to_dict().items()}


def field_section(man: Manifest) -> dict:
    X = man.field
    given = X.normalized_from or X.lambdas
    out = {
        "given_lambda": [rational(x) for x in given],
        "lambda": [rational(x) for x in X.lambdas],
        "kappa": rational(X.kappa),
        "normalized": man.normalized,
        "zero": X.is_zero,
        "warning": None,
    }
    if man.normalized:
        out["warning"] = normalization_warning(man)
    return out


def normalization_warning(man: Manifest) -> str:
    X = man.field
    msg = f"eigenvalues sum to {rational(sum(X.normalized_from))}, not 0; shifted to the trace-zero representative"
    if X.is_zero:
        msg += "; the normalized field is zero, so every invariant vanishes"
    return msg


def invariant_section(man: Manifest, opts: ReportOptions) -> list[dict]:
    F, X = man.polynomial, man.field
    rows = []
    for q in range(1, man.m + 1):
        rep = invariant_report(F, X, q, opts.plan() if opts.numeric else None)
        rows.append({
            "q": q,
            "closed": rational(rep.closed),
            "coeff_route": rational(rep.coeff_route),
            "routes_agree": rep.closed == rep.coeff_route,
            "lambda_exact": rational(rep.lambda_exact),
            "numeric": estimate(rep.numeric),
            "lambda_q": estimate(rep.lambda_q),
            "consistent": rep.consistent,
        })
    return rows


def _verdict(ref: Fraction, closed: Fraction, numeric: McEstimate | None, zero_field: bool) -> str:
    if ref == closed:
        return "reference confirmed by the exact routes"
    if zero_field:
        return "reference rejected: the trace-zero field vanishes, so the invariant is exactly 0"
    if numeric is None:
        return "reference rejected by the exact routes"
    on_exact, on_ref = numeric.within(float(closed)), numeric.within(float(ref))
    if on_exact and not on_ref:
        return "reference rejected: the numeric route agrees with the exact routes"
    if on_ref and not on_exact:
        return "exact routes disagree with the numeric route, which matches the reference"
    if on_ref and on_exact:
        return "undecided: the numeric route cannot separate reference and exact value"
    return "reference rejected by the exact routes; the numeric route agrees with neither"


def adjudication_section(man: Manifest, invariants: list[dict], numerics: dict[int, McEstimate | None]) -> list[dict]:
    out = []
    for q, ref in sorted(man.reference.items()):
        row = next(r for r in invariants if r["q"] == q)
        closed = Fraction(row["closed"])
        num = numerics.get(q)
        out.append({
            "q": q,
            "reference": rational(ref),
            "exact": row["closed"],
            "reference_matches_exact": ref == closed,
            "numeric": estimate(num),
            "numeric_matches_exact": None if num is None else num.within(float(closed)),
            "numeric_matches_reference": None if num is None else num.within(float(ref)),
            "verdict": _verdict(ref, closed, num, man.field.is_zero),
        })
    return out


def calibration_section(man: Manifest, opts: ReportOptions) -> dict:
    c = calibrate(man.polynomial, man.field, opts.plan())
    return {
        "degree": estimate(c.degree),
        "degree_exact": c.degree_exact,
        "hamiltonian": estimate(c.hamiltonian),
        "hamiltonian_exact": rational(man.field.kappa / man.n),
        "kappa_min": number(c.kappa_min),
        "kappa_max": number(c.kappa_max),
        "kappa_spread": number(c.kappa_spread),
        "passed": c.passed,
    }


def chen_tian_section(man: Manifest, opts: ReportOptions) -> dict:
    F, X = man.polynomial, man.field
    target = comb.bando_futaki_closed(man.n, F.d, 1, X.kappa)
    rows = []
    for k in range(man.m):
        r = chen_tian(F, X, k, opts.plan())
        rows.append({
            "k": k,
            "value": estimate(r.value),
            "ratio": estimate(r.ratio),
            "laplacian_term": estimate(r.laplacian_term),
            "matches_f1": r.ratio.within(float(target)),
        })
    pairwise = []
    for i in range(len(rows)):
        for j in range(i + 1, len(rows)):
            a, b = rows[i]["ratio"], rows[j]["ratio"]
            err = math.hypot(a["stderr"], b["stderr"])
            pairwise.append({"k": [i, j], "difference": number(a["mean"] - b["mean"]), "stderr": number(err),
                             "agree": abs(a["mean"] - b["mean"]) <= 3 * err + 1e-10})
    return {"f1_exact": rational(target), "ratios": rows, "pairwise": pairwise}


def polarization_section(man: Manifest, opts: ReportOptions) -> list[dict]:
    rows = []
    for q in range(1, man.m + 1):
        e = polarization_integral(man.polynomial, man.field, q, opts.plan())
        rows.append({"q": q, "integral": estimate(e), "vanishes": e.within(0.0)})
    return rows


def kenergy_section(man: Manifest, opts: ReportOptions) -> dict:
    F, X = man.polynomial, man.field
    plan = opts.plan(opts.kenergy_samples)
    cmp = kenergy_path_independence(F, X, 1, opts.t_end, opts.t_steps, plan)
    slope = kenergy_slope_check(F, X, 1, plan)
    return {
        "q": 1,
        "t_end": number(opts.t_end),
        "t_steps": opts.t_steps,
        "samples": opts.kenergy_samples,
        "automorphism": estimate(cmp.automorphism.value),
        "linear": estimate(cmp.linear.value),
        "difference": estimate(cmp.difference),
        "path_independent": cmp.passed,
        "slope": {
            "lhs": estimate(slope.lhs),
            "rhs": number(slope.rhs),
            "closed": rational(slope.closed),
            "passed": slope.passed,
        },
    }


def verify_section(man: Manifest, opts: ReportOptions) -> dict:
    rep = verify(man.polynomial, man.field, opts.verify_points, opts.seed, fd=opts.fd)
    out = rep.to_dict()
    for c in out["checks"].values():
        c["worst"] = number(c["worst"])
    return out


def build_report(man: Manifest, opts: ReportOptions | None = None) -> dict:
    """ReportDocument for ``man``.  Monte Carlo sections run only with ``opts.numeric``."""
    opts = opts or ReportOptions()
    F = man.polynomial
    invariants = invariant_section(man, opts)
    numerics: dict[int, McEstimate | None] = {}
    if opts.numeric:
        for row in invariants:
            n = row["numeric"]
            numerics[row["q"]] = McEstimate(n["mean"], n["stderr"], n["n_effective"], n["rejected"])
    doc = {
        "format_version": FORMAT_VERSION,
        "manifest": man.raw,
        "name": man.name,
        "n": man.n,
        "d": F.d,
        "field": field_section(man),
        "plan": {
            "samples": opts.samples,
            "seed": opts.seed,
            "method": opts.method,
            "numeric": opts.numeric,
            "verify_points": opts.verify_points,
            "fd": opts.fd,
            "kenergy_samples": opts.kenergy_samples if opts.numeric else None,
        },
        "invariants": invariants,
        "adjudication": adjudication_section(man, invariants, numerics),
        "verify": verify_section(man, opts),
    }
    if opts.numeric:
        doc["calibration"] = calibration_section(man, opts)
        doc["polarization"] = polarization_section(man, opts)
        doc["chen_tian"] = chen_tian_section(man, opts)
        doc["kenergy"] = kenergy_section(man, opts)
    return doc


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False, allow_nan=False) + "\n"
