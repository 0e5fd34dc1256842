from __future__ import annotations

import numpy as np
import pytest

from hyperfutaki.invariants import (
    PathSpec,
    chen_tian,
    futaki_numeric,
    invariant_report,
    kenergy_path_independence,
    polarization_integral,
)
from hyperfutaki.montecarlo import SamplePlan


def test_exact_report(cubic):
    rep = invariant_report(cubic.polynomial, cubic.field, 1)
    assert rep.closed == rep.coeff_route == -8
    assert rep.consistent is None


def test_numeric_f1_small(cubic):
    est, lam = futaki_numeric(cubic.polynomial, cubic.field, 1, SamplePlan(8192))
    assert est.within(-8.0, k=4)
    assert lam.within(1.0, k=4)


def test_numeric_is_zero_for_zero_field(example22):
    est, _ = futaki_numeric(example22.polynomial, example22.field, 1, SamplePlan(512))
    assert est.mean == 0


def test_numeric_quadric_kappa_zero(quadric):
    est, _ = futaki_numeric(quadric.polynomial, quadric.field, 1, SamplePlan(8192))
    assert est.within(0.0, k=4)


def test_hyperplane_chen_tian_vanishes(hyperplane):
    r = chen_tian(hyperplane.polynomial, hyperplane.field, 0, SamplePlan(4096))
    assert r.ratio.within(0.0, k=4)


def test_polarization_integral_quadric(quadric):
    assert polarization_integral(quadric.polynomial, quadric.field, 1, SamplePlan(4096)).within(0.0, k=4)


def test_pathspec_validation():
    with pytest.raises(ValueError):
        PathSpec("spiral", 0.2)
    with pytest.raises(ValueError):
        PathSpec("linear", 0.2, t_steps=2)
    assert np.allclose(PathSpec("linear", 0.2, 5).nodes, [0, 0.05, 0.1, 0.15, 0.2])


def test_kenergy_paths_agree_on_hyperplane(hyperplane):
    cmp = kenergy_path_independence(hyperplane.polynomial, hyperplane.field, 1, 0.2, 5, SamplePlan(1024))
    assert cmp.passed
