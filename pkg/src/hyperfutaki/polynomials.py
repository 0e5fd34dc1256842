"""Homogeneous defining polynomials and diagonal holomorphic vector fields."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np


class ValidationError(ValueError):
    pass


class NonHomogeneous(ValidationError):
    pass


class DegreeTooLarge(ValidationError):
    pass


class ZeroPolynomial(ValidationError):
    pass


class NotTangent(ValidationError):
    pass


@dataclass(frozen=True)
class Monomial:
    coefficient: tuple[Fraction, Fraction]  # (real, imag)
    exponents: tuple[int, ...]

    @property
    def degree(self) -> int:
        return sum(self.exponents)

    @property
    def complex_value(self) -> complex:
        re, im = self.coefficient
        return complex(float(re), float(im))


@dataclass(frozen=True)
class HomogeneousPolynomial:
    """A degree-d form in the homogeneous coordinates Z_0..Z_n.

    Numeric evaluation uses dense exponent and coefficient arrays built once in
    ``__post_init__``; every evaluator broadcasts over leading axes of ``Z``.
    """

    n: int
    d: int
    monomials: tuple[Monomial, ...]
    _coef: np.ndarray = field(init=False, repr=False, compare=False)
    _exp: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_coef", np.array([m.complex_value for m in self.monomials], dtype=complex))
        object.__setattr__(self, "_exp", np.array([m.exponents for m in self.monomials], dtype=np.int64))

    @property
    def coefficients(self) -> np.ndarray:
        return self._coef

    @property
    def exponents(self) -> np.ndarray:
        return self._exp

    def __call__(self, Z: np.ndarray) -> np.ndarray:
        return eval_with_derivs(self, Z, order=0)[0]


def _as_fraction_pair(c) -> tuple[Fraction, Fraction]:
    if isinstance(c, (list, tuple)):
        if len(c) != 2:
            raise ValidationError(f"complex coefficient must be [re, im], got {c!r}")
        return Fraction(str(c[0])), Fraction(str(c[1]))
    if isinstance(c, complex):
        return Fraction(c.real), Fraction(c.imag)
    return Fraction(str(c)), Fraction(0)


def validate_polynomial(raw: Iterable, n: int) -> HomogeneousPolynomial:
    """Build a polynomial from ``(coefficient, exponents)`` pairs or manifest dicts.

    Duplicate exponent vectors are merged; vanishing terms are dropped.
    """
    merged: dict[tuple[int, ...], tuple[Fraction, Fraction]] = {}
    for term in raw:
        if isinstance(term, dict):
            coef, exps = term["coefficient"], term["exponents"]
        else:
            coef, exps = term
        exps = tuple(int(e) for e in exps)
        if len(exps) != n + 1:
            raise ValidationError(f"exponent vector {exps} has length {len(exps)}, expected {n + 1}")
        if any(e < 0 for e in exps):
            raise ValidationError(f"negative exponent in {exps}")
        re, im = _as_fraction_pair(coef)
        old = merged.get(exps, (Fraction(0), Fraction(0)))
        merged[exps] = (old[0] + re, old[1] + im)

    monos = tuple(
        Monomial(coefficient=c, exponents=e)
        for e, c in sorted(merged.items(), reverse=True)
        if c != (0, 0)
    )
    if not monos:
        raise ZeroPolynomial("polynomial has no nonzero terms")
    degrees = {m.degree for m in monos}
    if len(degrees) > 1:
        raise NonHomogeneous(f"mixed monomial degrees {sorted(degrees)}")
    d = degrees.pop()
    if d < 1:
        raise ValidationError("constant polynomial does not define a hypersurface")
    if d > n:
        raise DegreeTooLarge(f"degree {d} exceeds n = {n}")
    return HomogeneousPolynomial(n=n, d=d, monomials=monos)


def _powers(Z: np.ndarray, dmax: int) -> np.ndarray:
    """P[..., k, e] = Z_k^e for e = 0..dmax."""
    out = np.ones(Z.shape + (dmax + 1,), dtype=complex)
    for e in range(1, dmax + 1):
        out[..., e] = out[..., e - 1] * Z
    return out


def eval_with_derivs(F: HomogeneousPolynomial, Z: np.ndarray, order: int = 2):
    """Value, gradient and Hessian of F at ``Z`` (shape ``(..., n+1)``).

    Returns a tuple with ``order + 1`` entries.  Derivatives are taken
    monomial by monomial, so they are exact up to floating-point rounding.
    """
    Z = np.asarray(Z, dtype=complex)
    E = F.exponents  # (M, n+1)
    c = F.coefficients
    P = _powers(Z, F.d)  # (..., n+1, d+1)
    nv = F.n + 1
    idx = np.arange(nv)
    # base[..., mono, k] = Z_k^{e_k}
    base = P[..., idx[None, :], E]
    value = np.einsum("m,...m->...", c, np.prod(base, axis=-1))
    if order == 0:
        return (value,)

    def prod_with(replaced: dict[int, np.ndarray]) -> np.ndarray:
        b = base.copy()
        for k, arr in replaced.items():
            b[..., k] = arr
        return np.prod(b, axis=-1)

    grad = np.zeros(Z.shape, dtype=complex)
    for k in range(nv):
        ek = E[:, k]
        lowered = P[..., k, :][..., np.maximum(ek - 1, 0)] * ek
        grad[..., k] = np.einsum("m,...m->...", c, prod_with({k: lowered}))
    if order == 1:
        return value, grad

    hess = np.zeros(Z.shape + (nv,), dtype=complex)
    for k in range(nv):
        ek = E[:, k]
        for l in range(k, nv):
            if l == k:
                low = P[..., k, :][..., np.maximum(ek - 2, 0)] * (ek * (ek - 1))
                h = np.einsum("m,...m->...", c, prod_with({k: low}))
            else:
                el = E[:, l]
                lk = P[..., k, :][..., np.maximum(ek - 1, 0)] * ek
                ll = P[..., l, :][..., np.maximum(el - 1, 0)] * el
                h = np.einsum("m,...m->...", c, prod_with({k: lk, l: ll}))
            hess[..., k, l] = h
            hess[..., l, k] = h
    return value, grad, hess


@dataclass(frozen=True)
class DiagonalField:
    """X = sum lambda_i Z_i d/dZ_i with XF = kappa F."""

    lambdas: tuple[Fraction, ...]
    kappa: Fraction
    normalized_from: tuple[Fraction, ...] | None = None

    @property
    def trace(self) -> Fraction:
        return sum(self.lambdas, Fraction(0))

    @property
    def was_normalized(self) -> bool:
        return self.normalized_from is not None and tuple(self.normalized_from) != tuple(self.lambdas)

    def as_array(self) -> np.ndarray:
        return np.array([float(x) for x in self.lambdas])

    @property
    def is_zero(self) -> bool:
        return all(x == 0 for x in self.lambdas)


def field_kappa(F: HomogeneousPolynomial, lambdas: Sequence) -> Fraction:
    lam = [Fraction(str(x)) if not isinstance(x, Fraction) else x for x in lambdas]
    if len(lam) != F.n + 1:
        raise ValidationError(f"need {F.n + 1} eigenvalues, got {len(lam)}")
    values = {sum((l * e for l, e in zip(lam, m.exponents)), Fraction(0)) for m in F.monomials}
    if len(values) != 1:
        raise NotTangent(f"monomials have different X-eigenvalues {sorted(values)}")
    return values.pop()


def normalize_field(lambdas: Sequence, d: int, kappa) -> tuple[tuple[Fraction, ...], Fraction]:
    lam = [Fraction(str(x)) if not isinstance(x, Fraction) else x for x in lambdas]
    s = sum(lam, Fraction(0))
    shift = s / len(lam)
    return tuple(l - shift for l in lam), Fraction(kappa) - shift * d


def make_field(F: HomogeneousPolynomial, lambdas: Sequence) -> DiagonalField:
    """Check tangency, then project to the trace-zero representative."""
    lam = tuple(Fraction(str(x)) if not isinstance(x, Fraction) else x for x in lambdas)
    kappa = field_kappa(F, lam)
    lam2, kappa2 = normalize_field(lam, F.d, kappa)
    return DiagonalField(lambdas=lam2, kappa=kappa2, normalized_from=lam)
