from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hyperfutaki import combinatorics as comb


@st.composite
def ndq(draw, n_max=12):
    n = draw(st.integers(2, n_max))
    d = draw(st.integers(1, n))
    q = draw(st.integers(1, n - 1))
    return n, d, q


def test_alpha_row_example():
    assert comb.alpha_table(3, 3, 2).rows[2] == (1, 2, 3)


def test_alpha_first_column_alternates():
    t = comb.alpha_table(7, 4, 6)
    assert [t[q, 0] for q in range(7)] == [(-1) ** q for q in range(7)]


@given(ndq())
def test_table_matches_closed_form(args):
    n, d, q = args
    row = comb.alpha_table(n, d, q).rows[q]
    assert row == tuple(comb.alpha_closed(n, d, q, k) for k in range(q + 1))


@given(ndq(), st.fractions(max_denominator=50).filter(lambda x: abs(x) < 100))
def test_routes_agree(args, kappa):
    n, d, q = args
    assert comb.bando_futaki_closed(n, d, q, kappa) == comb.bando_futaki_coeff_route(n, d, q, kappa)


@given(ndq(), st.integers(-20, 20), st.integers(-20, 20))
def test_linear_in_kappa(args, a, b):
    n, d, q = args
    f = lambda k: comb.bando_futaki_closed(n, d, q, k)
    assert f(a + b) == f(a) + f(b)


@given(st.integers(2, 12).flatmap(lambda n: st.tuples(st.just(n), st.integers(1, n))))
def test_first_invariant_is_futaki(nd):
    n, d = nd
    assert comb.bando_futaki_closed(n, d, 1, 3) == comb.futaki_first(n, d, 3)


def test_known_values():
    assert comb.bando_futaki_closed(3, 3, 1, 3) == -8
    assert comb.bando_futaki_closed(3, 3, 2, 3) == 24
    assert comb.futaki_first(4, 2, 1) == Fraction(-135, 4)


@given(ndq())
def test_hyperplanes_vanish(args):
    n, _, q = args
    assert comb.bando_futaki_closed(n, 1, q, 7) == 0


def test_harmonic_ratio_cubic():
    assert comb.harmonic_ratio(3, 3, 1) == 1
    assert comb.harmonic_ratio(3, 3, 2) == 3


@given(st.fractions())
def test_rational_round_trip(x):
    assert comb.parse_rational(comb.format_rational(x)) == x


@pytest.mark.parametrize("n,d,q", [(3, 4, 1), (3, 3, 3), (3, 3, 0), (0, 1, 1)])
def test_domain_errors(n, d, q):
    with pytest.raises(comb.DomainError):
        comb.bando_futaki_closed(n, d, q, 1)
