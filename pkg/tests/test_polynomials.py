from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperfutaki.polynomials import (
    DegreeTooLarge,
    NonHomogeneous,
    NotTangent,
    ZeroPolynomial,
    eval_with_derivs,
    make_field,
    validate_polynomial,
)

CUBIC = [(1, (1, 2, 0, 0)), (1, (0, 0, 2, 1)), (-1, (0, 0, 1, 2))]


def test_validation_errors():
    with pytest.raises(NonHomogeneous):
        validate_polynomial([(1, (1, 0, 0)), (1, (1, 1, 0))], 2)
    with pytest.raises(DegreeTooLarge):
        validate_polynomial([(1, (3, 0, 0))], 2)
    with pytest.raises(ZeroPolynomial):
        validate_polynomial([(1, (1, 0, 0)), (-1, (1, 0, 0))], 2)


def test_field_normalization():
    F = validate_polynomial(CUBIC, 3)
    X = make_field(F, [-7, 5, 1, 1])
    assert X.kappa == 3 and not X.was_normalized
    Y = make_field(F, [-6, 6, 2, 2])
    assert Y.lambdas == X.lambdas and Y.kappa == 3 and Y.was_normalized


def test_not_tangent():
    F = validate_polynomial(CUBIC, 3)
    with pytest.raises(NotTangent):
        make_field(F, [1, 0, 0, 0])


def test_complex_coefficients():
    F = validate_polynomial([(["1", "2"], (1, 1, 0)), ("1/2", (0, 0, 2))], 2)
    Z = np.array([1.0, 2.0, 3.0])
    assert np.isclose(F(Z), (1 + 2j) * 2 + 4.5)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_derivatives_match_finite_differences(seed):
    rng = np.random.default_rng(seed)
    F = validate_polynomial(CUBIC + [(Fraction(3, 7), (1, 1, 1, 0))], 3)
    Z = rng.normal(size=4) + 1j * rng.normal(size=4)
    _, g, H = eval_with_derivs(F, Z)
    h = 1e-6
    for k in range(4):
        e = np.zeros(4)
        e[k] = h
        v1, g1 = eval_with_derivs(F, Z + e, order=1)
        v0, g0 = eval_with_derivs(F, Z - e, order=1)
        assert abs((v1 - v0) / (2 * h) - g[k]) < 1e-6 * (1 + abs(g[k]))
        assert np.allclose((g1 - g0) / (2 * h), H[k], atol=1e-5)
