from __future__ import annotations

import pytest

from hyperfutaki.verify import TOLERANCES, verify


@pytest.mark.parametrize("name", ["quadric", "hyperplane"])
def test_verify_passes(name, request):
    man = request.getfixturevalue(name)
    rep = verify(man.polynomial, man.field, points=200, seed=1, fd=True)
    assert rep.passed, rep.failures
    assert {c.name for c in rep.checks} == set(TOLERANCES)


def test_report_dict(hyperplane):
    d = verify(hyperplane.polynomial, hyperplane.field, points=50).to_dict()
    assert d["failed"] == 0 and d["points"] == 50
    assert "curvature_fd" not in d["checks"]
