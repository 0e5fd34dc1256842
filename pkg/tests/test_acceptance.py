"""The eleven acceptance criteria at their stated tolerances.

Each test records one PASS/FAIL line, repeated in the terminal summary.
Exact oracles are written out independently here rather than imported.
"""

from __future__ import annotations

import math
import time
from fractions import Fraction
from math import comb as C

import numpy as np
import pytest

from conftest import record_criterion
from hyperfutaki import combinatorics as hc
from hyperfutaki.cli import main
from hyperfutaki.forms import newton_elementary
from hyperfutaki.invariants import (
    chen_tian,
    futaki_numeric,
    invariant_report,
    kenergy_path_independence,
    kenergy_slope_check,
    polarization_integral,
)
from hyperfutaki.manifest import BUNDLED, load_manifest
from hyperfutaki.montecarlo import SamplePlan, calibrate
from hyperfutaki.report import ReportOptions, build_report
from hyperfutaki.verify import verify

N_MAIN = 200_000
N_CALIBRATE = 100_000
N_KENERGY = 8192


def futaki_oracle(n: int, d: int, kappa) -> Fraction:
    return -Fraction((n + 1 - d) ** (n - 1) * (n + 1) * (d - 1), n) * Fraction(kappa)


def test_criterion_01_exact_route_triangle():
    t0 = time.perf_counter()
    bad = []
    kappa = Fraction(7, 3)
    for n in range(2, 13):
        for d in range(1, n + 1):
            table = hc.alpha_table(n, d, n - 1)
            for q in range(n):
                for k in range(q + 1):
                    if table[q, k] != hc.alpha_closed(n, d, q, k):
                        bad.append(("alpha", n, d, q, k))
            for q in range(1, n):
                if hc.bando_futaki_closed(n, d, q, kappa) != hc.bando_futaki_coeff_route(n, d, q, kappa):
                    bad.append(("F", n, d, q))
    dt = time.perf_counter() - t0
    ok = not bad and dt < 1.0
    record_criterion(1, ok, f"{len(bad)} mismatches over 2<=n<=12, {dt:.3f} s")
    assert ok, bad[:5]


@pytest.mark.slow
def test_criterion_02_cubic_f1(cubic):
    t0 = time.perf_counter()
    rep = invariant_report(cubic.polynomial, cubic.field, 1, SamplePlan(N_MAIN, base_seed=0))
    dt = time.perf_counter() - t0
    e = rep.numeric
    ok = rep.closed == -8 and rep.coeff_route == -8 and e.within(-8.0) and e.stderr <= 0.3
    record_criterion(2, ok, f"closed {rep.closed}, numeric {e.mean:.3f} +/- {e.stderr:.3f} (target -8), {dt:.0f} s")
    assert ok


def test_criterion_03_first_invariant_forms():
    bad = []
    for n, d in [(3, 3), (4, 2), (4, 3)]:
        for kappa in (1, 3, Fraction(-5, 2)):
            if hc.bando_futaki_closed(n, d, 1, kappa) != futaki_oracle(n, d, kappa):
                bad.append((n, d, kappa))
    for n in range(2, 13):
        for q in range(1, n):
            if hc.bando_futaki_closed(n, 1, q, 11) != 0 or hc.bando_futaki_coeff_route(n, 1, q, 11) != 0:
                bad.append((n, 1, q))
    record_criterion(3, not bad, f"{len(bad)} mismatches; F1(4,2,kappa=1) = {hc.futaki_first(4, 2, 1)}")
    assert not bad


@pytest.mark.slow
def test_criterion_04_discrepancy_adjudication(cubic, example22):
    rep = invariant_report(cubic.polynomial, cubic.field, 2, SamplePlan(N_MAIN, base_seed=0))
    e = rep.numeric
    exact_ok = rep.closed == rep.coeff_route == 24
    numeric_ok = e.within(24.0) and e.stderr <= 1.5
    printed_rejected = not e.within(48.0) and rep.closed != 48
    zero_ok = all(
        hc.bando_futaki_closed(4, 2, q, example22.field.kappa) == 0 == invariant_report(example22.polynomial, example22.field, q).coeff_route
        for q in range(1, 4)
    ) and example22.normalized
    doc = build_report(cubic, ReportOptions(verify_points=20, fd=False))
    recorded = any(a["q"] == 2 and a["reference"] == "48" and not a["reference_matches_exact"] for a in doc["adjudication"])
    ok = exact_ok and numeric_ok and printed_rejected and zero_ok and recorded
    record_criterion(
        4, ok,
        f"exact {rep.closed} (routes agree: {exact_ok}); numeric {e.mean:.2f} +/- {e.stderr:.2f} "
        f"agrees with 24: {e.within(24.0)}; 48 rejected: {printed_rejected}; example22 all zero: {zero_ok}; adjudication recorded: {recorded}",
    )
    assert ok


@pytest.mark.slow
def test_criterion_05_pointwise_suite(cubic, quadric, hyperplane):
    lines, ok = [], True
    for man in (cubic, quadric, hyperplane):
        t0 = time.perf_counter()
        rep = verify(man.polynomial, man.field, points=1000, seed=0, fd=True)
        dt = time.perf_counter() - t0
        good = rep.passed and rep.points >= 1000 and dt <= 60
        ok &= good
        worst = max(rep.checks, key=lambda c: c.worst / c.tolerance)
        lines.append(f"{man.name}: {len(rep.checks) - len(rep.failures)}/{len(rep.checks)} in {dt:.1f} s (tightest {worst.name} {worst.worst:.1e})")
    record_criterion(5, ok, "; ".join(lines))
    assert ok


@pytest.mark.slow
def test_criterion_06_calibration():
    parts, ok = [], True
    for name in BUNDLED:
        man = load_manifest(name)
        c = calibrate(man.polynomial, man.field, SamplePlan(N_CALIBRATE, base_seed=0))
        ok &= c.passed
        parts.append(f"{name}: vol {c.degree.mean:.4f}/{c.degree_exact}, theta {c.hamiltonian.mean:.4f}+/-{c.hamiltonian.stderr:.4f} vs {c.hamiltonian_exact:.4f}")
    record_criterion(6, ok, "; ".join(parts))
    assert ok


@pytest.mark.slow
def test_criterion_07_polarization_vanishes(cubic):
    parts, ok = [], True
    for q in (1, 2):
        e = polarization_integral(cubic.polynomial, cubic.field, q, SamplePlan(N_CALIBRATE, base_seed=0))
        ok &= abs(e.mean) <= 3 * e.stderr
        parts.append(f"q={q}: {e.mean:.3f} +/- {e.stderr:.3f}")
    record_criterion(7, ok, "; ".join(parts))
    assert ok


def test_criterion_08_newton_identities():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(200):
        s = int(rng.integers(1, 9))
        A = rng.normal(size=(s, s)) + 1j * rng.normal(size=(s, s))
        char = np.poly(A)
        for q in range(1, s + 1):
            ref = (-1) ** q * char[q]
            worst = max(worst, abs(newton_elementary(A, q) - ref) / abs(ref))
    ok = worst <= 1e-10
    record_criterion(8, ok, f"worst relative error {worst:.1e} over 200 matrices")
    assert ok


@pytest.mark.slow
def test_criterion_09_chen_tian(cubic):
    plan = SamplePlan(N_MAIN, base_seed=0)
    r = [chen_tian(cubic.polynomial, cubic.field, k, plan).ratio for k in (0, 1)]
    each = [e.within(-8.0) for e in r]
    comb_err = math.hypot(r[0].stderr, r[1].stderr)
    mutual = abs(r[0].mean - r[1].mean) <= 3 * comb_err
    ok = all(each) and mutual
    record_criterion(
        9, ok,
        f"F0/1 = {r[0].mean:.2f} +/- {r[0].stderr:.2f}, F1/2 = {r[1].mean:.2f} +/- {r[1].stderr:.2f}; "
        f"match -8: {each}; mutual: {mutual}",
    )
    assert ok


@pytest.mark.slow
def test_criterion_10_kenergy(cubic):
    plan = SamplePlan(N_KENERGY, base_seed=0)
    cmp = kenergy_path_independence(cubic.polynomial, cubic.field, 1, 0.2, 5, plan)
    slope = kenergy_slope_check(cubic.polynomial, cubic.field, 1, plan)
    ok = cmp.passed and slope.passed
    a, l = cmp.automorphism.value, cmp.linear.value
    record_criterion(
        10, ok,
        f"automorphism {a.mean:.3f} +/- {a.stderr:.3f}, linear {l.mean:.3f} +/- {l.stderr:.3f}, "
        f"diff {cmp.difference.mean:.3f} +/- {cmp.difference.stderr:.3f}; "
        f"slope {slope.lhs.mean:.2f} +/- {slope.lhs.stderr:.2f} vs {slope.rhs:.3f}",
    )
    assert ok


@pytest.mark.slow
def test_criterion_11_determinism(tmp_path, capsys):
    common = ["report", "--manifest", "cubic", "--all", "--samples", "4096", "--kenergy-samples", "256", "--points", "200", "--seed", "7"]
    paths = [tmp_path / f"r{i}.json" for i in range(3)]
    codes = [
        main(common + ["-o", str(paths[0])]),
        main(common + ["-o", str(paths[1])]),
        main(common + ["--workers", "4", "-o", str(paths[2])]),
    ]
    capsys.readouterr()
    blobs = [p.read_bytes() for p in paths]
    ok = codes == [0, 0, 0] and blobs[0] == blobs[1] == blobs[2]
    record_criterion(11, ok, f"serial/serial/parallel reports byte-identical: {ok} ({len(blobs[0])} bytes)")
    assert ok
