from __future__ import annotations

import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperfutaki.forms import (
    CurvatureMatrix,
    FormPQ,
    chern_direct,
    chern_newton,
    elementary_symmetric,
    newton_elementary,
    polarization_nabla_x,
    polarization_newton,
    top_coefficient,
    wedge,
)

seeds = st.integers(0, 2**32 - 1)


def random_hermitian(rng, m, batch=()):
    A = rng.normal(size=batch + (m, m)) + 1j * rng.normal(size=batch + (m, m))
    return A + np.conj(np.swapaxes(A, -1, -2))


def random_curvature(rng, m):
    return rng.normal(size=(m, m, m, m)) + 1j * rng.normal(size=(m, m, m, m))


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 4))
def test_top_power_is_determinant(seed, m):
    g = random_hermitian(np.random.default_rng(seed), m)
    w = FormPQ.from_matrix(g)
    assert np.isclose(top_coefficient(w.power(m)), math.factorial(m) * np.linalg.det(g))


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(2, 4))
def test_wedge_of_11_forms_commutes(seed, m):
    rng = np.random.default_rng(seed)
    a = FormPQ.from_matrix(random_hermitian(rng, m))
    b = FormPQ.from_matrix(random_hermitian(rng, m))
    assert np.allclose(wedge(a, b).coeffs, wedge(b, a).coeffs)


@settings(max_examples=20, deadline=None)
@given(seeds, st.integers(2, 4))
def test_chern_routes_agree(seed, m):
    Th = CurvatureMatrix.from_tensor(random_curvature(np.random.default_rng(seed), m))
    for q in range(1, m + 1):
        a, b = chern_direct(Th, q).coeffs, chern_newton(Th, q).coeffs
        assert np.max(np.abs(a - b)) <= 1e-10 * max(1.0, np.max(np.abs(a)))


@settings(max_examples=20, deadline=None)
@given(seeds, st.integers(2, 4))
def test_polarization_routes_agree(seed, m):
    rng = np.random.default_rng(seed)
    Th = CurvatureMatrix.from_tensor(random_curvature(rng, m))
    NX = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    for q in range(1, m + 1):
        a = polarization_nabla_x(NX, Th, q).coeffs
        b = polarization_newton(NX, Th, q).coeffs
        assert np.allclose(a, b, atol=1e-10 * max(1.0, np.max(np.abs(a))))


def test_chern_of_scalar_matrix_is_elementary_symmetric():
    rng = np.random.default_rng(3)
    m = 3
    A = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    g = np.eye(m)
    # Theta = A * omega with omega = sum dz_i ^ dzbar_i gives c_q = e_q(A) omega^q
    R = A[:, :, None, None] * g[None, None]
    w = FormPQ.from_matrix(g)
    ev = np.linalg.eigvals(A)
    for q in range(1, m + 1):
        c = chern_newton(CurvatureMatrix.from_tensor(R), q)
        expect = elementary_symmetric(ev, q) * w.power(q).coeffs
        assert np.allclose(c.coeffs, expect)


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 8))
def test_newton_elementary_matches_charpoly(seed, size):
    A = np.random.default_rng(seed).normal(size=(size, size)) + 1j * np.random.default_rng(seed + 1).normal(size=(size, size))
    coeffs = np.poly(A)  # prod (t - lambda) = sum (-1)^q e_q t^(size-q)
    for q in range(1, size + 1):
        e = newton_elementary(A, q)
        ref = (-1) ** q * coeffs[q]
        assert abs(e - ref) <= 1e-10 * max(1.0, abs(ref))
