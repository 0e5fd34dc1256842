"""Pointwise identity suite: every closed form checked against an independent route at random points of M."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import combinatorics as comb
from .forms import (
    CurvatureMatrix,
    FormPQ,
    chern_direct,
    chern_newton,
    polarization_nabla_x,
    top_coefficient,
    trace_power,
    wedge,
)
from .geometry import (
    GeometryFrame,
    batch_fiber_roots,
    curvature_fd,
    ddbar_fd,
    frames,
    inverse_metric_closed,
    kappa_pointwise,
    metric_field_on_M,
    theta_field_on_M,
)
from .montecarlo import sample_points
from .polynomials import DiagonalField, HomogeneousPolynomial

STREAM_VERIFY = 21
# FD error grows like condition * eps / step^2; this cap keeps it below 1e-5
FD_CONDITIONED = 1e2
FD_STEP = 1e-3

TOLERANCES = {
    "metric_inverse": 1e-9,
    "metric_inverse_closed": 1e-9,
    "det_identity": 1e-9,
    "f0_identity": 1e-9,
    "da_symmetric": 1e-9,
    "ricci_identity": 1e-9,
    "div_equals_laplacian": 1e-9,
    "kappa_constancy": 1e-8,
    "top_volume": 1e-9,
    "trace_identity": 1e-8,
    "chern_decomposition": 1e-8,
    "chern_routes": 1e-10,
    "polarization_identity": 1e-8,
    "curvature_fd": 1e-4,
    "ddbar_theta_fd": 1e-5,
}


@dataclass
class Check:
    name: str
    tolerance: float
    worst: float
    points: int

    @property
    def passed(self) -> bool:
        return bool(self.worst <= self.tolerance)

    def to_dict(self) -> dict:
        return {"tolerance": self.tolerance, "worst": float(self.worst), "points": int(self.points), "passed": self.passed}


@dataclass
class VerifyReport:
    points: int
    rejected: int
    checks: list[Check] = field(default_factory=list)
    fd_points: int = 0
    fd_skipped: int = 0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            "points": self.points,
            "rejected": self.rejected,
            "fd_points": self.fd_points,
            "fd_skipped": self.fd_skipped,
            "passed": sum(c.passed for c in self.checks),
            "failed": sum(not c.passed for c in self.checks),
            "checks": {c.name: c.to_dict() for c in self.checks},
        }


def _rel(a: np.ndarray, b: np.ndarray, axes) -> np.ndarray:
    """Per-point max |a - b| over ``axes`` divided by the larger of the two magnitudes."""
    num = np.max(np.abs(a - b), axis=axes)
    den = np.maximum(np.max(np.abs(a), axis=axes), np.max(np.abs(b), axis=axes))
    return num / np.maximum(den, 1e-300)


def _form_rel(A: FormPQ, B: FormPQ, scale: FormPQ | None = None) -> np.ndarray:
    axes = (-2, -1)
    num = np.max(np.abs(A.coeffs - B.coeffs), axis=axes)
    den = np.maximum(np.max(np.abs(A.coeffs), axis=axes), np.max(np.abs(B.coeffs), axis=axes))
    if scale is not None:
        den = np.maximum(den, np.max(np.abs(scale.coeffs), axis=axes))
    return num / np.maximum(den, 1e-300)


def frame_checks(F: HomogeneousPolynomial, X: DiagonalField, fr: GeometryFrame) -> dict[str, np.ndarray]:
    """Per-point residuals of every closed-form identity, keyed like TOLERANCES."""
    n, d = F.n, F.d
    m = n - 1
    B = fr.Z.shape[0]
    z = fr.Z[:, 1:]
    out: dict[str, np.ndarray] = {}

    eye = np.eye(m)
    prod = np.einsum("...kj,...ij->...ki", fr.g, fr.g_inv)
    out["metric_inverse"] = np.max(np.abs(prod - eye), axis=(-2, -1))
    out["metric_inverse_closed"] = _rel(inverse_metric_closed(fr.a, z, fr.rho), fr.g_inv, (-2, -1))
    S = np.sum(np.abs(fr.grad) ** 2, axis=-1)
    det_closed = S / (np.abs(fr.grad[:, 1]) ** 2 * fr.S0**n)
    out["det_identity"] = np.abs(np.real(np.linalg.det(fr.g)) - det_closed) / det_closed
    lhs = np.sum(fr.a * fr.Z[:, 2:], axis=-1) - fr.Z[:, 1]
    rhs = fr.grad[:, 0] / fr.grad[:, 1]
    out["f0_identity"] = np.abs(lhs - rhs) / np.maximum(np.abs(rhs), 1.0)
    out["da_symmetric"] = _rel(fr.da, np.swapaxes(fr.da, -1, -2), (-2, -1))
    out["ricci_identity"] = _rel(fr.ricci, (n + 1 - d) * fr.g - fr.ddbar_xi, (-2, -1))
    out["div_equals_laplacian"] = np.abs(fr.div_X - fr.lap_theta) / np.maximum(np.abs(fr.lap_theta), 1.0)
    kappa = float(X.kappa)
    out["kappa_constancy"] = np.abs(np.real(kappa_pointwise(fr, d)) - kappa) / max(1.0, abs(kappa))

    w = FormPQ.from_matrix(fr.g)
    xi = FormPQ.from_matrix(fr.ddbar_xi)
    Th = CurvatureMatrix.from_tensor(fr.curvature)
    one = FormPQ.scalar(m, np.ones(B))
    vol = math.factorial(m) * np.real(np.linalg.det(fr.g))
    out["top_volume"] = np.abs(np.real(top_coefficient(w.power(m))) - vol) / vol

    trace_res = np.zeros(B)
    for j in range(1, m + 1):
        A = trace_power(Th, j)
        C = (n + 1) * w.power(j) - (d * w + xi).power(j)
        trace_res = np.maximum(trace_res, _form_rel(A, C, w.power(j)))
    out["trace_identity"] = trace_res

    table = comb.alpha_table(n, d, m)
    dec = np.zeros(B)
    routes = np.zeros(B)
    polar = np.zeros(B)
    H = FormPQ.from_matrix(fr.ddbar_theta)
    for q in range(1, m + 1):
        cd = chern_direct(Th, q)
        cn = chern_newton(Th, q)
        routes = np.maximum(routes, _form_rel(cd, cn))
        expansion = FormPQ.zeros(m, q, (B,))
        for k in range(q + 1):
            expansion = expansion + float(table[q, k]) * wedge(w.power(k), xi.power(q - k))
        dec = np.maximum(dec, _form_rel(cd, expansion, w.power(q)))
        prev = chern_newton(Th, q - 1) if q > 1 else one
        left = -(m + 1 - q) * wedge(wedge(H, prev), w.power(m - q))
        right = q * wedge(polarization_nabla_x(fr.nabla_X, Th, q), w.power(m + 1 - q))
        scale = np.maximum(np.abs(top_coefficient(wedge(wedge(H, prev), w.power(m - q)))), vol)
        polar = np.maximum(polar, np.abs(top_coefficient(left) - top_coefficient(right)) / scale)
    out["chern_decomposition"] = dec
    out["chern_routes"] = routes
    out["polarization_identity"] = polar
    return out


def local_scale(F: HomogeneousPolynomial, fr: GeometryFrame) -> np.ndarray:
    """Length in z' over which chart quantities change by O(1).

    Far out the metric varies on the scale sqrt(1 + |z|^2); near the branch
    locus the sheet through the point meets another one after a distance
    of about (root separation) / |a|.
    """
    scale = np.sqrt(fr.S0)
    roots, _ = batch_fiber_roots(F, fr.Z[:, 2:])
    if roots.shape[1] > 1:
        dist = np.abs(roots - fr.Z[:, 1:2])
        dist = np.where(dist > 1e-9 * (1 + np.abs(fr.Z[:, 1:2])), dist, np.inf)
        sep = dist.min(axis=1)
        scale = np.minimum(scale, sep / (1 + np.linalg.norm(fr.a, axis=-1)))
    return scale


def fd_checks(F: HomogeneousPolynomial, X: DiagonalField, fr: GeometryFrame, step: float = FD_STEP):
    """Curvature and ddbar theta against Richardson-extrapolated central differences.

    Returns ``(residuals, skipped)``: points whose stencil leaves the sheet
    are dropped from the residual arrays and counted.
    """
    Z = fr.Z
    zp = Z[:, 2:]
    h = step * local_scale(F, fr)
    field_ = metric_field_on_M(F, Z[:, 1], None, strict=False, zprime_seed=zp)
    coarse = curvature_fd(field_, zp, h)
    fine = curvature_fd(field_, zp, h / 2)
    R_fd = (4 * fine - coarse) / 3
    scale = np.max(np.abs(fr.curvature), axis=(1, 2, 3, 4))
    curv = np.max(np.abs(R_fd - fr.curvature), axis=(1, 2, 3, 4)) / scale
    valid = np.isfinite(curv)
    theta_field = theta_field_on_M(F, Z[valid, 1], X.as_array(), zprime_seed=zp[valid])
    hv = h[valid]
    H_fd = (4 * ddbar_fd(theta_field, zp[valid], hv / 2) - ddbar_fd(theta_field, zp[valid], hv)) / 3
    dd = np.max(np.abs(H_fd - fr.ddbar_theta[valid]), axis=(1, 2))
    return {"curvature_fd": curv[valid], "ddbar_theta_fd": dd}, int(np.sum(~valid))


def verify(F: HomogeneousPolynomial, X: DiagonalField, points: int = 1000, seed: int = 0, fd: bool = False) -> VerifyReport:
    Z, rejected = sample_points(F, points, seed, stream=STREAM_VERIFY)
    fr = frames(F, X.as_array(), Z)
    report = VerifyReport(points=len(Z), rejected=rejected)
    for name, res in frame_checks(F, X, fr).items():
        report.checks.append(Check(name, TOLERANCES[name], float(np.max(res)), len(res)))
    if fd:
        Zf, _ = sample_points(F, points, seed, max_condition=FD_CONDITIONED, stream=STREAM_VERIFY + 1)
        frf = frames(F, X.as_array(), Zf)
        res, skipped = fd_checks(F, X, frf)
        report.fd_points, report.fd_skipped = len(Zf) - skipped, skipped
        for name, r in res.items():
            report.checks.append(Check(name, TOLERANCES[name], float(np.max(r)) if r.size else math.inf, len(r)))
    return report
