from __future__ import annotations

import json

import pytest

from hyperfutaki.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out.strip(), out.err


def test_alpha(capsys):
    assert run(capsys, "alpha", "--n", "3", "--d", "3", "--q", "2")[:2] == (0, "1, 2, 3")


def test_invariant_closed(capsys):
    assert run(capsys, "invariant", "--manifest", "cubic", "--q", "1", "--route", "closed")[:2] == (0, "-8")


def test_example22_warns(capsys):
    code, out, err = run(capsys, "invariant", "--manifest", "example22", "--q", "1", "--samples", "64")
    assert code == 0
    assert "warning" in err and "zero" in err
    assert "closed: 0" in out and "coeff: 0" in out


def test_invariant_json(capsys):
    code, out, _ = run(capsys, "invariant", "--manifest", "cubic", "--q", "2", "--route", "coeff", "--json")
    assert code == 0 and json.loads(out)["coeff_route"] == "24"


@pytest.mark.parametrize(
    "argv",
    [
        ("invariant", "--manifest", "missing.json", "--q", "1"),
        ("invariant", "--manifest", "cubic", "--q", "3", "--route", "closed"),
        ("alpha", "--n", "3", "--d", "4", "--q", "1"),
        ("alpha", "--n", "3"),
        ("calibrate", "--manifest", "cubic", "--samples", "1"),
        ("kenergy", "--manifest", "cubic", "--t-steps", "2"),
    ],
)
def test_invalid_input_exits_1(capsys, argv):
    assert run(capsys, *argv)[0] == 1


def test_budget_failure_exits_2(capsys, tmp_path):
    # F = Z1^2: every point of M has F_1 = 0, so the chart always degenerates
    raw = {"n": 2, "polynomial": [{"coefficient": "1", "exponents": [0, 2, 0]}], "field": {"lambda": ["0", "0", "0"]}}
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(raw))
    assert run(capsys, "calibrate", "--manifest", str(p), "--samples", "64")[0] == 2


def test_verify_text(capsys):
    code, out, _ = run(capsys, "verify", "--manifest", "hyperplane", "--points", "50")
    assert code == 0 and out.endswith("13/13 checks passed")


def test_report_exact_only(capsys, tmp_path):
    dest = tmp_path / "r.json"
    code, _, _ = run(capsys, "report", "--manifest", "example22", "--points", "20", "--no-fd", "-o", str(dest))
    doc = json.loads(dest.read_text(encoding="utf-8"))
    assert code == 0
    assert [r["closed"] for r in doc["invariants"]] == ["0", "0", "0"]
    assert all(not a["reference_matches_exact"] for a in doc["adjudication"])
