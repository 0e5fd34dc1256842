from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperfutaki.geometry import (
    ChartDegenerate,
    batch_fiber_roots,
    fiber_roots,
    frames,
    line_points,
    polynomial_roots,
    potential_curvature,
)
from hyperfutaki.montecarlo import sample_points


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_polynomial_roots_residual(seed, r):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=(5, r + 1)) + 1j * rng.normal(size=(5, r + 1))
    roots, ok = polynomial_roots(c)
    for row, rt, good in zip(c, roots, ok):
        if good:
            assert np.all(np.abs(np.polyval(row, rt)) <= 1e-10 * np.abs(row).sum() * (1 + np.abs(rt)) ** r)


def test_cubic_has_two_finite_sheets(cubic):
    # the Z1^3 coefficient vanishes: the third sheet sits at [0:1:0:0]
    s = fiber_roots(cubic.polynomial, [0.3 + 0.1j, -0.7j])
    assert len(s.roots) == 2
    assert np.allclose(cubic.polynomial(s.points), 0, atol=1e-12)


def test_line_points_lie_on_M(quadric):
    rng = np.random.default_rng(1)
    u = rng.normal(size=(64, 4)) + 1j * rng.normal(size=(64, 4))
    v = rng.normal(size=(64, 4)) + 1j * rng.normal(size=(64, 4))
    Z, ok = line_points(quadric.polynomial, u, v)
    assert ok.mean() > 0.95
    assert Z.shape == (64, 2, 4)
    val = quadric.polynomial(Z[ok])
    assert np.max(np.abs(val) / np.linalg.norm(Z[ok], axis=-1) ** 2) < 1e-12


def test_frame_basic_identities(cubic):
    F, X = cubic.polynomial, cubic.field
    Z, _ = sample_points(F, 200, seed=4)
    fr = frames(F, X.as_array(), Z)
    assert np.allclose(fr.g, np.conj(np.swapaxes(fr.g, -1, -2)))
    assert np.all(np.linalg.eigvalsh(fr.g) > 0)
    assert np.all(np.isfinite(fr.curvature))
    kap = -(fr.div_X - fr.X_xi - (F.n - F.d + 1) * fr.theta)
    assert np.allclose(kap, 3, atol=1e-8)


def test_chart_guard(cubic):
    F, X = cubic.polynomial, cubic.field
    # the point [0:0:1:1] lies on M with F_1 = 0
    Z = np.array([[1e-30, 0, 1, 1]], dtype=complex)
    with pytest.raises(ChartDegenerate):
        frames(F, X.as_array(), Z)


def test_potential_curvature_matches_frames(quadric):
    F, X = quadric.polynomial, quadric.field
    Z, _ = sample_points(F, 100, seed=2)
    fr = frames(F, X.as_array(), Z)
    g, R = potential_curvature(F, Z, [np.ones(F.n + 1)], [1.0])
    assert np.allclose(g, fr.g, atol=1e-12)
    assert np.max(np.abs(R - fr.curvature)) <= 1e-10 * np.max(np.abs(fr.curvature))


def test_batch_roots_mask(hyperplane):
    roots, ok = batch_fiber_roots(hyperplane.polynomial, np.array([[0.5], [2.0]]))
    assert roots.shape == (2, 1) and ok.all()
