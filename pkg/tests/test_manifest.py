from __future__ import annotations

import json
from fractions import Fraction

import pytest

from hyperfutaki.manifest import BUNDLED, load_manifest, parse_manifest
from hyperfutaki.polynomials import ValidationError


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_load(name):
    man = load_manifest(name)
    assert man.m == man.n - 1
    assert sum(man.field.lambdas) == 0


def test_example22_is_flagged(example22):
    assert example22.normalized and example22.field.is_zero
    assert example22.reference[3] == Fraction(-285, 2)


def test_load_from_path(tmp_path, cubic):
    p = tmp_path / "m.json"
    p.write_text(json.dumps(cubic.raw))
    assert load_manifest(p).field.kappa == 3


@pytest.mark.parametrize(
    "raw",
    [
        {},
        {"n": 1, "polynomial": [], "field": {"lambda": []}},
        {"n": 2, "polynomial": [{"coefficient": "1", "exponents": [1, 0, 0]}], "field": {"lambda": ["1", "x", "0"]}},
        {"n": 2, "polynomial": [{"coefficient": "1", "exponents": [1, 0, 0]}], "field": {"lambda": [0, 0, 0]}, "reference_values": {"5": "1"}},
    ],
)
def test_malformed(raw):
    with pytest.raises(ValidationError):
        parse_manifest(raw)


def test_missing_file():
    with pytest.raises(ValidationError):
        load_manifest("/nonexistent/manifest.json")
