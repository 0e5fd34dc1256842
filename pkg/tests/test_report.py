from __future__ import annotations

import json
from fractions import Fraction

from hyperfutaki import combinatorics as comb
from hyperfutaki.report import ReportOptions, build_report, dumps

OPTS = ReportOptions(samples=2048, numeric=True, verify_points=50, fd=False, kenergy_samples=64)


def test_rationals_round_trip(cubic):
    doc = json.loads(dumps(build_report(cubic, ReportOptions(verify_points=20, fd=False))))
    for row in doc["invariants"]:
        q = row["q"]
        assert Fraction(row["closed"]) == comb.bando_futaki_closed(3, 3, q, 3)
        assert Fraction(row["lambda_exact"]) == comb.harmonic_ratio(3, 3, q)


def test_cubic_adjudication(cubic):
    doc = build_report(cubic, OPTS)
    adj = {a["q"]: a for a in doc["adjudication"]}
    assert adj[1]["reference_matches_exact"]
    assert adj[2]["reference"] == "48" and adj[2]["exact"] == "24"
    assert not adj[2]["reference_matches_exact"]
    assert adj[2]["numeric"]["stderr"] > 0


def test_byte_identical(quadric):
    a = dumps(build_report(quadric, OPTS))
    b = dumps(build_report(quadric, ReportOptions(**{**OPTS.__dict__, "workers": 3})))
    assert a == b
    assert "workers" not in a
