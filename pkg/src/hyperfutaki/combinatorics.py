"""Exact rational evaluation of the Chern coefficients and Bando-Futaki closed forms.

Everything here works on :class:`fractions.Fraction` and Python integers, so
results are exact for any ``n``.  ``kappa`` enters every invariant linearly and
is passed in as a value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

Rational = Union[int, Fraction]


class DomainError(ValueError):
    """Raised when an index lies outside the range where a formula is defined."""


def binomial(a: int, b: int) -> int:
    """C(a, b), with the convention C(a, b) = 0 when b < 0 or b > a."""
    if b < 0 or a < 0 or b > a:
        return 0
    return math.comb(a, b)


def _check_nd(n: int, d: int) -> None:
    if n < 1 or d < 1:
        raise DomainError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    if d > n:
        raise DomainError(f"degree d={d} exceeds n={n}; c1(M) is not positive")


@dataclass(frozen=True)
class AlphaTable:
    """Rows ``rows[q] = (alpha_q0, ..., alpha_qq)`` for q = 0..q_max."""

    n: int
    d: int
    rows: tuple[tuple[Fraction, ...], ...]

    @property
    def q_max(self) -> int:
        return len(self.rows) - 1

    def __getitem__(self, qk: tuple[int, int]) -> Fraction:
        q, k = qk
        return self.rows[q][k]


def alpha_table(n: int, d: int, q_max: int) -> AlphaTable:
    """Build the Chern coefficient table by the degree recurrence.

    alpha_qq = C(n+1, q) - d * alpha_(q-1)(q-1),
    alpha_qk = -(d * alpha_(q-1)(k-1) + alpha_(q-1)k)  for 0 <= k < q,
    with alpha_00 = 1 (so alpha_q0 = (-1)^q).
    """
    _check_nd(n, d)
    if q_max < 0 or q_max > n - 1:
        raise DomainError(f"q_max={q_max} outside 0..{n - 1}")
    rows: list[tuple[Fraction, ...]] = [(Fraction(1),)]
    for q in range(1, q_max + 1):
        prev = rows[-1]
        row = []
        for k in range(q + 1):
            if k == q:
                row.append(Fraction(binomial(n + 1, q)) - d * prev[q - 1])
            else:
                left = prev[k - 1] if k >= 1 else Fraction(0)
                row.append(-(d * left + prev[k]))
        rows.append(tuple(row))
    return AlphaTable(n=n, d=d, rows=tuple(rows))


def alpha_closed(n: int, d: int, q: int, k: int) -> Fraction:
    """alpha_qk = (-1)^q sum_l (-1)^l d^(k-l) C(q-l, k-l) C(n+1, l)."""
    _check_nd(n, d)
    if not (0 <= k <= q <= n - 1):
        raise DomainError(f"need 0 <= k <= q <= n-1, got q={q}, k={k}, n={n}")
    total = sum(
        (-1) ** l * d ** (k - l) * binomial(q - l, k - l) * binomial(n + 1, l)
        for l in range(k + 1)
    )
    return Fraction((-1) ** q * total)


def _check_q(n: int, d: int, q: int) -> None:
    _check_nd(n, d)
    if not (1 <= q <= n - 1):
        raise DomainError(f"invariant index q={q} outside 1..{n - 1}")


def bando_futaki_closed(n: int, d: int, q: int, kappa: Rational) -> Fraction:
    """Closed form of the q-th Bando-Futaki invariant of a degree-d hypersurface in CP^n."""
    _check_q(n, d, q)
    s = sum((-d) ** j * (j + 1) * binomial(n, q - j - 1) for j in range(q))
    return -Fraction((n + 1 - d) ** (n - q) * (d - 1) * (n + 1), n) * s * Fraction(kappa)


def bando_futaki_coeff_route(n: int, d: int, q: int, kappa: Rational) -> Fraction:
    """The same invariant assembled from the Chern coefficients.

    kappa * (n+1-d)^(n-q) * (alpha_qq * q/n + d * alpha_q(q-1)); the second
    term is -C(q) * d with the harmonic constant C(q) = -kappa * alpha_q(q-1).
    """
    _check_q(n, d, q)
    row = alpha_table(n, d, q).rows[q]
    return Fraction(kappa) * (n + 1 - d) ** (n - q) * (row[q] * Fraction(q, n) + d * row[q - 1])


def harmonic_constant(n: int, d: int, q: int, kappa: Rational) -> Fraction:
    """C(q) = -kappa * alpha_q(q-1), the harmonic coefficient of the contracted Chern form."""
    _check_q(n, d, q)
    return -Fraction(kappa) * alpha_table(n, d, q).rows[q][q - 1]


def futaki_first(n: int, d: int, kappa: Rational) -> Fraction:
    """Classical Futaki invariant -(n+1-d)^(n-1) (n+1)(d-1) kappa / n."""
    _check_q(n, d, 1)
    return -Fraction((n + 1 - d) ** (n - 1) * (n + 1) * (d - 1), n) * Fraction(kappa)


def harmonic_ratio(n: int, d: int, q: int) -> Fraction:
    """Exact lambda_q with Hc_q(omega_M) = lambda_q omega_M^q, i.e. alpha_qq / (n+1-d)^q.

    Only the alpha_qq omega^q part of c_q survives integration against
    omega^(m-q); the remaining terms are d d-bar exact.
    """
    _check_q(n, d, q)
    return alpha_table(n, d, q).rows[q][q] / Fraction(n + 1 - d) ** q


def format_rational(x: Rational) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def parse_rational(text: str | int | Fraction) -> Fraction:
    if isinstance(text, (int, Fraction)):
        return Fraction(text)
    return Fraction(str(text).strip())
