"""Manifest files: a polynomial, a diagonal field, and bundled examples."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .polynomials import DiagonalField, HomogeneousPolynomial, ValidationError, make_field, validate_polynomial

BUNDLED = ("cubic", "example22", "quadric", "hyperplane")


@dataclass(frozen=True)
class Manifest:
    name: str
    n: int
    polynomial: HomogeneousPolynomial
    field: DiagonalField
    raw: dict
    # externally quoted F_q values to adjudicate against, keyed by q
    reference: dict[int, Fraction] = field(default_factory=dict)

    @property
    def normalized(self) -> bool:
        """True when the given eigenvalues had nonzero trace and were shifted."""
        return self.field.was_normalized

    @property
    def m(self) -> int:
        return self.n - 1


def parse_manifest(raw: dict, name: str = "manifest") -> Manifest:
    try:
        n = int(raw["n"])
        terms = raw["polynomial"]
        lambdas = [Fraction(str(x)) for x in raw["field"]["lambda"]]
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise ValidationError(f"malformed manifest: {exc}") from exc
    if n < 2:
        raise ValidationError(f"n = {n}: need n >= 2")
    F = validate_polynomial(terms, n)
    X = make_field(F, lambdas)
    try:
        reference = {int(q): Fraction(str(v)) for q, v in raw.get("reference_values", {}).items()}
    except (AttributeError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise ValidationError(f"malformed reference_values: {exc}") from exc
    bad = [q for q in reference if not 1 <= q <= n - 1]
    if bad:
        raise ValidationError(f"reference_values for q = {bad} outside 1..{n - 1}")
    return Manifest(name=str(raw.get("name", name)), n=n, polynomial=F, field=X, raw=raw, reference=reference)


def bundled_path(name: str) -> Path:
    if name not in BUNDLED:
        raise ValidationError(f"no bundled manifest {name!r}; choose from {', '.join(BUNDLED)}")
    return Path(str(resources.files("hyperfutaki") / "data" / f"{name}.json"))


def load_manifest(source: str | Path) -> Manifest:
    """Read a manifest from a path, or from a bundled name such as ``cubic``."""
    path = Path(source)
    if not path.exists() and str(source) in BUNDLED:
        path = bundled_path(str(source))
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ValidationError(f"manifest not found: {source}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"manifest {source} is not valid JSON: {exc}") from exc
    return parse_manifest(raw, name=path.stem)
