"""Pointwise geometry of a hypersurface M in the affine chart Z_0 = 1.

Coordinates on M are z' = (z_2, ..., z_n) and z_1 is solved implicitly from
f(z_1, z') = F(1, z_1, z') = 0.  Every evaluator here is vectorised over a
leading batch axis: ``Z`` has shape ``(B, n+1)`` with ``Z[:, 0] == 1`` and each
row lying on M.

Index conventions used throughout (m = n - 1, chart indices 0..m-1 stand for
z_2..z_n):

* ``g[..., i, j]`` is g_{i jbar};
* ``g_inv[..., i, j]`` is g^{i jbar}, so that sum_j g_{k jbar} g^{i jbar} = delta;
* ``curvature[..., k, l, i, j]`` is R^l_{k i jbar};
* every (1,1) matrix ``A[..., i, j]`` stands for (sqrt(-1)/2pi) sum A_ij dz_i ^ dzbar_j.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .polynomials import DiagonalField, HomogeneousPolynomial, eval_with_derivs

CHART_GUARD = 1e-8
# pointwise identities lose roughly 1e-16 * condition digits; checks use this cap
WELL_CONDITIONED = 1e6
ROOT_SEPARATION = 1e-8


class GeometryError(RuntimeError):
    pass


class DegenerateFiber(GeometryError):
    pass


class ChartDegenerate(GeometryError):
    pass


class StencilFailure(GeometryError):
    pass


# ---------------------------------------------------------------------------
# fibers of the projection (z_1, z') -> z'


def _fiber_coefficients(F: HomogeneousPolynomial, zprime: np.ndarray) -> np.ndarray:
    """Coefficients (highest power first) of t -> F(1, t, z') for a batch of z'."""
    zprime = np.asarray(zprime, dtype=complex)
    E = F.exponents
    top = int(E[:, 1].max())
    coeffs = np.zeros(zprime.shape[:-1] + (top + 1,), dtype=complex)
    for c, e in zip(F.coefficients, E):
        term = c * np.prod(zprime ** e[2:], axis=-1)
        coeffs[..., top - e[1]] += term
    return coeffs


def _horner(coeffs: np.ndarray, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """p(t) and p'(t) with coefficients on the last axis, highest power first."""
    p = np.zeros_like(t)
    dp = np.zeros_like(t)
    for c in np.moveaxis(coeffs, -1, 0):
        dp = dp * t + p
        p = p * t + c[..., None] if t.ndim > c.ndim else p * t + c
    return p, dp


def _polish(coeffs: np.ndarray, roots: np.ndarray, iters: int = 6) -> np.ndarray:
    for _ in range(iters):
        p, dp = _horner(coeffs, roots)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(dp != 0, p / dp, 0)
        roots = roots - step
    return roots


@dataclass(frozen=True)
class ChartSample:
    zprime: np.ndarray
    roots: np.ndarray

    @property
    def points(self) -> np.ndarray:
        """Ambient Z = (1, z_1, z') for each root, shape (r, n+1)."""
        r = len(self.roots)
        Z = np.empty((r, len(self.zprime) + 2), dtype=complex)
        Z[:, 0] = 1
        Z[:, 1] = self.roots
        Z[:, 2:] = self.zprime
        return Z


def polynomial_roots(coeffs: np.ndarray):
    """All roots of a batch of univariate polynomials (highest power first), shape (B, r+1).

    Companion-matrix eigenvalues, then Newton polishing.  ``ok`` marks rows
    with a nonvanishing leading coefficient and pairwise-separated roots.
    """
    r = coeffs.shape[-1] - 1
    B = coeffs.shape[0]
    if r == 0:
        return np.zeros((B, 0), dtype=complex), np.zeros(B, dtype=bool)
    scale = np.abs(coeffs).max(axis=-1)
    lead = coeffs[..., 0]
    ok = np.abs(lead) > 1e-12 * np.maximum(scale, 1e-300)
    safe_lead = np.where(ok, lead, 1.0)
    monic = coeffs[..., 1:] / safe_lead[..., None]
    comp = np.zeros((B, r, r), dtype=complex)
    comp[:, 0, :] = -monic
    if r > 1:
        comp[:, np.arange(1, r), np.arange(r - 1)] = 1.0
    roots = np.linalg.eigvals(comp) if r > 1 else -monic.copy()
    roots = _polish(np.where(ok[:, None], coeffs, 1.0), roots)
    if r > 1:
        diff = np.where(np.eye(r, dtype=bool), np.inf, np.abs(roots[:, :, None] - roots[:, None, :]))
        size = 1.0 + np.abs(roots).max(axis=-1)
        ok &= diff.min(axis=(1, 2)) > ROOT_SEPARATION * size
    ok &= np.all(np.isfinite(roots), axis=-1)
    return roots, ok


def batch_fiber_roots(F: HomogeneousPolynomial, zprime: np.ndarray):
    """Roots of f(., z') for a batch of z' of shape (B, m).

    Returns ``(roots, ok)`` with ``roots`` of shape (B, r) where r is the
    z_1-degree of F, and ``ok`` a boolean mask marking fibers whose leading
    coefficient is nonzero and whose roots are simple.
    """
    return polynomial_roots(_fiber_coefficients(F, zprime))


def line_points(F: HomogeneousPolynomial, u: np.ndarray, v: np.ndarray):
    """Intersections of M with the projective lines through u and v, shape (B, d, n+1).

    F(u + t v) is interpolated at the (d+1)-st roots of unity and solved for
    t.  Points come back in the chart Z_0 = 1; ``ok`` marks lines meeting M in
    d distinct points off the hyperplane Z_0 = 0.
    """
    d = F.d
    ts = np.exp(2j * np.pi * np.arange(d + 1) / (d + 1))
    vals = F(u[:, None, :] + ts[None, :, None] * v[:, None, :])  # (B, d+1)
    # inverse of the Vandermonde matrix at roots of unity is a scaled DFT
    coeffs = np.fft.fft(vals, axis=-1) / (d + 1)  # ascending powers
    roots, ok = polynomial_roots(coeffs[:, ::-1])
    Z = u[:, None, :] + roots[..., None] * v[:, None, :]
    z0 = Z[..., 0]
    size = np.linalg.norm(Z, axis=-1)
    ok &= np.all(np.abs(z0) > 1e-12 * size, axis=-1)
    Z = Z / np.where(ok[:, None], z0, 1.0)[..., None]
    return Z, ok


def fiber_roots(F: HomogeneousPolynomial, zprime) -> ChartSample:
    """All finite roots z_1 of f(z_1, z') = 0 at one chart point."""
    zprime = np.atleast_1d(np.asarray(zprime, dtype=complex))
    coeffs = _fiber_coefficients(F, zprime[None])[0]
    scale = np.abs(coeffs).max() if coeffs.size else 0.0
    nz = np.nonzero(np.abs(coeffs) > 1e-14 * max(scale, 1e-300))[0]
    if scale == 0 or len(nz) == 0:
        raise DegenerateFiber(f"f(., z') vanishes identically at z' = {zprime}")
    coeffs = coeffs[nz[0]:]
    if len(coeffs) == 1:
        return ChartSample(zprime=zprime, roots=np.zeros(0, dtype=complex))
    roots = np.roots(coeffs)
    roots = _polish(coeffs[None], roots[None])[0]
    return ChartSample(zprime=zprime, roots=roots)


def chart_quality(F: HomogeneousPolynomial, Z: np.ndarray) -> np.ndarray:
    """|F_1|^2 / sum |F_k|^2, the chart validity ratio."""
    _, grad = eval_with_derivs(F, Z, order=1)
    return np.abs(grad[..., 1]) ** 2 / np.sum(np.abs(grad) ** 2, axis=-1)


# ---------------------------------------------------------------------------
# the geometry frame


def chart_condition(F: HomogeneousPolynomial, Z: np.ndarray) -> np.ndarray:
    """|Z|^2 / chart_quality: growth factor of rounding errors in chart quantities."""
    return np.sum(np.abs(Z) ** 2, axis=-1) / chart_quality(F, Z)


@dataclass
class GeometryFrame:
    Z: np.ndarray
    grad: np.ndarray
    a: np.ndarray
    da: np.ndarray
    jac: np.ndarray  # d(Z_0..Z_n)/dz', shape (..., n+1, m)
    g: np.ndarray
    g_inv: np.ndarray
    rho: np.ndarray
    theta: np.ndarray
    ddbar_theta: np.ndarray
    lap_theta: np.ndarray
    nabla_X: np.ndarray
    div_X: np.ndarray
    curvature: np.ndarray
    ricci: np.ndarray
    ddbar_xi: np.ndarray
    xi: np.ndarray
    X_xi: np.ndarray

    @property
    def m(self) -> int:
        return self.g.shape[-1]

    @property
    def n(self) -> int:
        return self.Z.shape[-1] - 1

    @property
    def S0(self) -> np.ndarray:
        return np.sum(np.abs(self.Z) ** 2, axis=-1)

    @property
    def S(self) -> np.ndarray:
        return np.sum(np.abs(self.grad) ** 2, axis=-1)

    def take(self, idx) -> "GeometryFrame":
        return GeometryFrame(**{k: v[idx] for k, v in self.__dict__.items()})


def _outer(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return x[..., :, None] * y[..., None, :]


def induced_metric(a: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Restriction of the Fubini-Study metric in terms of a_i = dz_1/dz_i.

    ``z`` holds the chart coordinates (z_1..z_n).
    """
    S0 = 1 + np.sum(np.abs(z) ** 2, axis=-1)
    u = np.conj(z[..., 1:]) + np.conj(z[..., :1]) * a
    m = a.shape[-1]
    return (np.eye(m) + _outer(a, np.conj(a))) / S0[..., None, None] - _outer(u, np.conj(u)) / (
        S0**2
    )[..., None, None]


def inverse_metric_closed(a: np.ndarray, z: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Closed-form inverse metric, returned as g_inv[..., i, j] = g^{i jbar}."""
    S0 = 1 + np.sum(np.abs(z) ** 2, axis=-1)
    zp, z1 = z[..., 1:], z[..., 0]
    m = a.shape[-1]
    a2 = np.sum(np.abs(a) ** 2, axis=-1)
    c = np.sum(a * zp, axis=-1) - z1  # = F_0/F_1
    r = rho[..., None, None]
    # entry [i, j]; outer(x, y)[i, j] = x_i y_j
    out = (
        (rho * S0)[..., None, None] * np.eye(m)
        - _outer(np.conj(a), a)
        + _outer(zp, np.conj(zp)) * (1 + a2)[..., None, None]
        - _outer(zp, a) * np.conj(c)[..., None, None]
        - _outer(np.conj(a), np.conj(zp)) * c[..., None, None]
    )
    return out / r


def _jacobian(a: np.ndarray, n: int) -> np.ndarray:
    m = a.shape[-1]
    J = np.zeros(a.shape[:-1] + (n + 1, m), dtype=complex)
    J[..., 1, :] = a
    J[..., 2:, :] = np.eye(m)
    return J


def _ddbar_of_weighted_sum(weights: np.ndarray, Z: np.ndarray, J: np.ndarray):
    """First and mixed second derivatives along M of sum w_k |Z_k|^2."""
    wZc = weights * np.conj(Z)
    val = np.sum(weights * np.abs(Z) ** 2, axis=-1)
    d1 = np.einsum("...k,...ki->...i", wZc, J)
    d2 = np.einsum("k,...ki,...kj->...ij", weights, J, np.conj(J))
    return val, d1, d2


def weighted_fs_metric(weights, F: HomogeneousPolynomial, Z: np.ndarray) -> np.ndarray:
    """(1,1) matrix of ddbar log(sum w_i |Z_i|^2) restricted to M."""
    _, grad = eval_with_derivs(F, np.asarray(Z, dtype=complex), order=1)
    _check_chart(grad)
    return _weighted_metric_unchecked(weights, F, Z, grad)


def _weighted_metric_unchecked(weights, F: HomogeneousPolynomial, Z: np.ndarray, grad: np.ndarray | None = None) -> np.ndarray:
    weights = np.asarray(weights, dtype=float)
    Z = np.asarray(Z, dtype=complex)
    if grad is None:
        _, grad = eval_with_derivs(F, Z, order=1)
    a = -grad[..., 2:] / grad[..., 1:2]
    J = _jacobian(a, F.n)
    val, d1, d2 = _ddbar_of_weighted_sum(weights, Z, J)
    return d2 / val[..., None, None] - _outer(d1, np.conj(d1)) / (val**2)[..., None, None]


def _check_chart(grad: np.ndarray) -> None:
    q = np.abs(grad[..., 1]) ** 2 / np.sum(np.abs(grad) ** 2, axis=-1)
    if np.any(~(q >= CHART_GUARD)):
        raise ChartDegenerate(f"|F_1|^2/sum|F_k|^2 = {np.min(q):.3g} below {CHART_GUARD}")


def frames(F: HomogeneousPolynomial, lambdas, Z: np.ndarray) -> GeometryFrame:
    """Evaluate every pointwise quantity at a batch of points of M."""
    Z = np.asarray(Z, dtype=complex)
    lam = np.asarray(lambdas, dtype=float)
    n, d = F.n, F.d
    m = n - 1
    _, grad, hess = eval_with_derivs(F, Z, order=2)
    _check_chart(grad)
    F1 = grad[..., 1]
    a = -grad[..., 2:] / F1[..., None]
    J = _jacobian(a, n)
    Gt = np.einsum("...kl,...li->...ki", hess, J)  # d/dz_i of F_k along M
    da = -(Gt[..., 2:, :] * F1[..., None, None] - grad[..., 2:, None] * Gt[..., 1:2, :]) / (
        F1**2
    )[..., None, None]

    z = Z[..., 1:]
    S0 = np.sum(np.abs(Z) ** 2, axis=-1)
    S = np.sum(np.abs(grad) ** 2, axis=-1)
    g = induced_metric(a, z)
    g_inv = np.swapaxes(np.linalg.inv(g), -1, -2)
    rho = S / (S0 * np.abs(F1) ** 2)

    # Gauss equation: R^l_{k i jbar} = d_kl g_ij + d_il g_kj - c da_ki sum_s conj(da_sj) g^{l sbar}
    # with c = 1/(rho (1+|z|^2)^2) = |F_1|^2 / (S S0)
    eye = np.eye(m)
    second = np.einsum("...ki,...sj,...ls->...klij", da, np.conj(da), g_inv)
    curv = (
        np.einsum("kl,...ij->...klij", eye, g)
        + np.einsum("il,...kj->...klij", eye, g)
        - second / (rho * S0**2)[..., None, None, None, None]
    )
    ricci = np.einsum("...kkij->...ij", curv)

    # xi = log(S / S0^(d-1)); ddbar log S from the total derivatives of F_k
    Gc = np.conj(Gt)
    dS = np.einsum("...ki,...k->...i", Gt, np.conj(grad))
    ddlogS = np.einsum("...ki,...kj->...ij", Gt, Gc) / S[..., None, None] - _outer(dS, np.conj(dS)) / (
        S**2
    )[..., None, None]
    ddbar_xi = ddlogS - (d - 1) * g
    xi = np.log(S) - (d - 1) * np.log(S0)
    u = np.conj(z[..., 1:]) + np.conj(z[..., :1]) * a
    dxi = dS / S[..., None] - (d - 1) * u / S0[..., None]
    Xc = (lam[2:] - lam[0]) * z[..., 1:]
    X_xi = np.sum(Xc * dxi, axis=-1)

    # theta = -A/S0 with A = sum lambda_k |Z_k|^2
    A, dA, ddA = _ddbar_of_weighted_sum(lam, Z, J)
    _, dS0, ddS0 = _ddbar_of_weighted_sum(np.ones(n + 1), Z, J)
    theta = -A / S0
    s0 = S0[..., None, None]
    H = -(
        ddA / s0
        - (_outer(dA, np.conj(dS0)) + _outer(dS0, np.conj(dA))) / s0**2
        - A[..., None, None] * ddS0 / s0**2
        + 2 * A[..., None, None] * _outer(dS0, np.conj(dS0)) / s0**3
    )
    lap_theta = -(np.sum(lam * np.abs(grad) ** 2, axis=-1) / S - n * theta)
    nabla_X = -np.einsum("...lj,...kj->...kl", g_inv, H)
    div_X = np.einsum("...kk->...", nabla_X)

    return GeometryFrame(
        Z=Z, grad=grad, a=a, da=da, jac=J, g=g, g_inv=g_inv, rho=rho, theta=theta,
        ddbar_theta=H, lap_theta=lap_theta, nabla_X=nabla_X, div_X=div_X,
        curvature=curv, ricci=ricci, ddbar_xi=ddbar_xi, xi=xi, X_xi=X_xi,
    )


def _log_potential_jets(w: np.ndarray, Z: np.ndarray):
    """Ambient derivatives of log sum w_a |Z_a|^2 up to order (2, 2).

    Returns (P2, T3, T4) with P2[a,b] = d_a dbar_b, T3[a,b,c] = d_c P2[a,b] and
    T4[a,b,c,d] = d_c dbar_d P2[a,b].
    """
    N = Z.shape[-1]
    W = np.eye(N) * w
    P = w * np.conj(Z)  # d_a S
    Q = w * Z  # dbar_b S
    S = np.sum(w * np.abs(Z) ** 2, axis=-1)[..., None, None]
    P2 = W / S - np.einsum("...a,...b->...ab", P, Q) / S**2
    S3, S4 = S[..., None], S[..., None, None]
    T3 = (
        -(np.einsum("ab,...c->...abc", W, P) + np.einsum("...a,bc->...abc", P, W)) / S3**2
        + 2 * np.einsum("...a,...b,...c->...abc", P, Q, P) / S3**3
    )
    T4 = (
        -(np.einsum("ab,cd->abcd", W, W) + np.einsum("ad,cb->abcd", W, W)) / S4**2
        + 2 * (np.einsum("ab,...c,...d->...abcd", W, P, Q) + np.einsum("...a,bc,...d->...abcd", P, W, Q)) / S4**3
        + 2 * (np.einsum("ad,...b,...c->...abcd", W, Q, P) + np.einsum("...a,...b,cd->...abcd", P, Q, W)) / S4**3
        - 6 * np.einsum("...a,...b,...c,...d->...abcd", P, Q, P, Q) / S4**4
    )
    return P2, T3, T4


def potential_curvature(F: HomogeneousPolynomial, Z: np.ndarray, weights, coefs) -> tuple[np.ndarray, np.ndarray]:
    """Metric and curvature of ddbar Phi restricted to M, Phi = sum_j c_j log sum_a w_ja |Z_a|^2.

    Covers the pulled-back metrics sigma^* omega_FS (one term) and their convex
    combinations.  Derivatives are exact: ambient jets of Phi composed with
    the first and second derivatives of the embedding z' -> (1, z_1(z'), z').
    Returns (g, R) in the conventions of ``frames``.
    """
    Z = np.asarray(Z, dtype=complex)
    n = F.n
    _, grad, hess = eval_with_derivs(F, Z, order=2)
    _check_chart(grad)
    F1 = grad[..., 1]
    a = -grad[..., 2:] / F1[..., None]
    J = _jacobian(a, n)
    Gt = np.einsum("...kl,...li->...ki", hess, J)
    da = -(Gt[..., 2:, :] * F1[..., None, None] - grad[..., 2:, None] * Gt[..., 1:2, :]) / (F1**2)[..., None, None]
    m = n - 1
    Hm = np.zeros(Z.shape[:-1] + (n + 1, m, m), dtype=complex)
    Hm[..., 1, :, :] = da
    P2 = T3 = T4 = 0
    for w, c in zip(np.atleast_2d(np.asarray(weights, dtype=float)), np.atleast_1d(coefs)):
        p2, t3, t4 = _log_potential_jets(w, Z)
        P2, T3, T4 = P2 + c * p2, T3 + c * t3, T4 + c * t4
    Jc, Hc = np.conj(J), np.conj(Hm)
    T3bar = np.conj(np.swapaxes(T3, -3, -2))  # dbar_d P2[a,b]
    g = np.einsum("...ab,...ak,...bl->...kl", P2, J, Jc, optimize=True)
    dg = np.einsum("...abc,...ci,...ak,...bl->...ikl", T3, J, J, Jc, optimize=True) + np.einsum("...ab,...aki,...bl->...ikl", P2, Hm, Jc, optimize=True)
    ddg = (
        np.einsum("...abcd,...ci,...ak,...bl,...dj->...ijkl", T4, J, J, Jc, Jc, optimize=True)
        + np.einsum("...abd,...aki,...dj,...bl->...ijkl", T3bar, Hm, Jc, Jc, optimize=True)
        + np.einsum("...abc,...ci,...ak,...blj->...ijkl", T3, J, J, Hc, optimize=True)
        + np.einsum("...ab,...aki,...blj->...ijkl", P2, Hm, Hc, optimize=True)
    )
    dbar_g = np.conj(np.swapaxes(dg, -1, -2))  # dbar_j g_{p sbar} at [j, p, s]
    ginv = np.linalg.inv(g)
    low = -np.einsum("...ijks->...ksij", ddg) + np.einsum("...ikq,...qp,...jps->...ksij", dg, ginv, dbar_g, optimize=True)
    return g, np.einsum("...ksij,...sl->...klij", low, ginv)


def frame_at(F: HomogeneousPolynomial, X: DiagonalField, sample: ChartSample, root_index: int) -> GeometryFrame:
    """Frame at a single root of a chart sample (batch axis of length 1)."""
    Z = sample.points[root_index : root_index + 1]
    return frames(F, X.as_array(), Z)


def ddbar_theta_closed(a: np.ndarray, z: np.ndarray, lambdas) -> np.ndarray:
    """d_k dbar_j theta written out term by term in a_i, z_i and the eigenvalues."""
    lam = np.asarray(lambdas, dtype=float)
    S0 = (1 + np.sum(np.abs(z) ** 2, axis=-1))[..., None, None]
    z1, zp = z[..., 0][..., None, None], z[..., 1:]
    lj = (lam[2:] - lam[0])[None, :]  # indexed by j
    l1 = lam[1] - lam[0]
    m = a.shape[-1]
    theta = -(np.sum(lam[1:] * np.abs(z) ** 2, axis=-1) / (S0[..., 0, 0])) - lam[0]
    t0 = (theta + lam[0])[..., None, None]
    uk = (np.conj(zp) + np.conj(z1[..., 0]) * a)[..., :, None]  # zbar_k + zbar_1 a_k
    vj = (zp + z1[..., 0] * np.conj(a))[..., None, :]  # z_j + z_1 abar_j
    ak = a[..., :, None]
    abj = np.conj(a)[..., None, :]
    zj = zp[..., None, :]
    zbk = np.conj(zp)[..., :, None]
    return (
        -np.eye(m) * lj / S0
        + lj * zj * uk / S0**2
        - l1 * ak * abj / S0
        + l1 * z1 * abj * uk / S0**2
        + lj * zbk / S0 * vj / S0
        + l1 * np.conj(z1) * zj / S0 * vj / S0
        + 2 * t0 * uk * vj / S0**2
        - t0 * (np.eye(m) + ak * abj) / S0
    )


def kappa_pointwise(frame: GeometryFrame, d: int) -> np.ndarray:
    """-(div X - X(xi) - (n - d + 1) theta); constant and equal to kappa on M."""
    return -(frame.div_X - frame.X_xi - (frame.n - d + 1) * frame.theta)


# ---------------------------------------------------------------------------
# finite-difference curvature oracle


def curvature_fd(metric_field: Callable[[np.ndarray], np.ndarray], zprime: np.ndarray, step=1e-4) -> np.ndarray:
    """Chern curvature R^l_{k i jbar} of a metric field by central differences.

    ``metric_field`` maps an array of chart points (..., m) to metrics
    (..., m, m).  All stencil points are sent in a single call with an extra
    axis inserted before the coordinate axis.  ``step`` is a scalar or has the
    batch shape of ``zprime``.  Returns (..., m, m, m, m).
    """
    zprime = np.asarray(zprime, dtype=complex)
    step = np.asarray(step, dtype=float)[..., None, None, None]
    m = zprime.shape[-1]
    nr = 2 * m
    basis = np.zeros((nr, m), dtype=complex)
    basis[np.arange(m), np.arange(m)] = 1
    basis[m + np.arange(m), np.arange(m)] = 1j
    offsets = [np.zeros(m, dtype=complex)]
    for a in range(nr):
        offsets += [basis[a], -basis[a]]
    pairs = [(a, b) for a in range(nr) for b in range(a + 1, nr)]
    for a, b in pairs:
        for sa, sb in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
            offsets.append(sa * basis[a] + sb * basis[b])
    offs = np.array(offsets) * step[..., 0]  # (..., P, m)
    pts = zprime[..., None, :] + offs
    G = np.asarray(metric_field(pts))  # (..., P, m, m)
    g0 = G[..., 0, :, :]
    plus = G[..., 1 : 1 + 2 * nr : 2, :, :]
    minus = G[..., 2 : 2 + 2 * nr : 2, :, :]
    first = (plus - minus) / (2 * step)  # (..., nr, m, m)
    hess = np.zeros(G.shape[:-3] + (nr, nr) + G.shape[-2:], dtype=complex)
    diag = (plus - 2 * g0[..., None, :, :] + minus) / step**2
    hess[..., np.arange(nr), np.arange(nr), :, :] = diag
    base = 1 + 2 * nr
    for idx, (a, b) in enumerate(pairs):
        blk = G[..., base + 4 * idx : base + 4 * idx + 4, :, :]
        val = (blk[..., 0, :, :] - blk[..., 1, :, :] - blk[..., 2, :, :] + blk[..., 3, :, :]) / (4 * step[..., 0] ** 2)
        hess[..., a, b, :, :] = val
        hess[..., b, a, :, :] = val
    dx, dy = first[..., :m, :, :], first[..., m:, :, :]
    d_hol = 0.5 * (dx - 1j * dy)  # d/dz_i of G, index i first
    d_bar = 0.5 * (dx + 1j * dy)
    hxx = hess[..., :m, :m, :, :]
    hyy = hess[..., m:, m:, :, :]
    hxy = hess[..., :m, m:, :, :]
    hyx = hess[..., m:, :m, :, :]
    dd = 0.25 * (hxx + hyy + 1j * (hxy - hyx))  # d_i dbar_j G, indices (i, j)
    ginv = np.linalg.inv(g0)  # ginv[q, p] = g^{p qbar}
    # R_{k sbar i jbar} = -d_i dbar_j g_{k sbar} + g^{p qbar} d_i g_{k qbar} dbar_j g_{p sbar}
    low = -np.einsum("...ijks->...ksij", dd) + np.einsum(
        "...ikq,...qp,...jps->...ksij", d_hol, ginv, d_bar
    )
    # raise s with g^{l sbar} = ginv[s, l]
    return np.einsum("...ksij,...sl->...klij", low, ginv)


def _sheet_follower(F: HomogeneousPolynomial, z1_seed: np.ndarray, zprime_seed: np.ndarray | None, newton_iters: int):
    """Callable pts -> (z_1 on the sheet through the seed, bad mask).

    With ``zprime_seed`` the start value is the first-order prediction along
    the sheet and the accepted drift is a quarter of the distance from the
    seed to the nearest other root of its fiber, which rules out jumping
    sheets near the branch locus.
    """
    z1_seed = np.asarray(z1_seed, dtype=complex)
    if zprime_seed is not None:
        zprime_seed = np.asarray(zprime_seed, dtype=complex)
        Z0 = np.concatenate([np.ones(z1_seed.shape + (1,)), z1_seed[..., None], zprime_seed], axis=-1)
        _, grad = eval_with_derivs(F, Z0, order=1)
        slope = -grad[..., 2:] / grad[..., 1:2]
        roots, _ = batch_fiber_roots(F, zprime_seed.reshape(-1, zprime_seed.shape[-1]))
        roots = roots.reshape(z1_seed.shape + (-1,))
        dist = np.abs(roots - z1_seed[..., None])
        others = np.where(dist > 1e-9 * (1 + np.abs(z1_seed[..., None])), dist, np.inf)
        reach = 0.25 * np.min(others, axis=-1) if roots.shape[-1] > 1 else np.full(z1_seed.shape, np.inf)
        reach = np.minimum(reach, 0.1 * (1 + np.abs(z1_seed)))

    def follow(pts: np.ndarray):
        coeffs = _fiber_coefficients(F, pts)
        if zprime_seed is None:
            start = np.broadcast_to(z1_seed[..., None], pts.shape[:-1]).copy()
            limit = 0.1 * (1 + np.abs(z1_seed[..., None]))
        else:
            start = z1_seed[..., None] + np.einsum("...k,...pk->...p", slope, pts - zprime_seed[..., None, :])
            limit = reach[..., None]
        t = start
        for _ in range(newton_iters):
            p, dp = _horner(coeffs, t)
            with np.errstate(divide="ignore", invalid="ignore"):
                t = t - p / dp
        p, _ = _horner(coeffs, t)
        scale = np.abs(coeffs).max(axis=-1) * (1 + np.abs(t)) ** (coeffs.shape[-1] - 1)
        drift = np.abs(t - start)
        bad = ~(np.abs(p) <= 1e-10 * scale) | ~(drift <= limit)
        return t, bad

    return follow


def metric_field_on_M(
    F: HomogeneousPolynomial,
    z1_seed: np.ndarray,
    weights=None,
    newton_iters: int = 12,
    strict: bool = True,
    zprime_seed: np.ndarray | None = None,
):
    """Metric field z' -> (weighted) induced metric, following the sheet through ``z1_seed``.

    ``z1_seed`` has the batch shape of the base points; the returned callable
    accepts stencil arrays of shape (..., P, m) and continues z_1 from the seed
    by Newton iteration.  Passing the base points as ``zprime_seed`` enables
    the predictor and the sheet-separation guard.  With ``strict=False``
    stencil points whose re-solve fails yield NaN metrics instead of raising.
    """
    w = np.ones(F.n + 1) if weights is None else np.asarray(weights, dtype=float)
    follow = _sheet_follower(F, z1_seed, zprime_seed, newton_iters)

    def field(pts: np.ndarray) -> np.ndarray:
        t, bad = follow(pts)
        if np.any(bad):
            if strict:
                raise StencilFailure("z_1 re-solve failed on the finite-difference stencil")
            t = np.where(bad, np.broadcast_to(np.asarray(z1_seed)[..., None], t.shape), t)
        Z = np.concatenate([np.ones(pts.shape[:-1] + (1,), dtype=complex), t[..., None], pts], axis=-1)
        if strict:
            return weighted_fs_metric(w, F, Z)
        out = _weighted_metric_unchecked(w, F, Z)
        out[bad] = np.nan
        return out

    return field


def theta_field_on_M(F: HomogeneousPolynomial, z1_seed: np.ndarray, lambdas, newton_iters: int = 12, zprime_seed: np.ndarray | None = None):
    """Scalar field z' -> theta on the sheet through ``z1_seed`` (for FD checks)."""
    lam = np.asarray(lambdas, dtype=float)
    follow = _sheet_follower(F, z1_seed, zprime_seed, newton_iters)

    def field(pts: np.ndarray) -> np.ndarray:
        t, bad = follow(pts)
        if np.any(bad):
            raise StencilFailure("z_1 re-solve failed on the finite-difference stencil")
        Z = np.concatenate([np.ones(pts.shape[:-1] + (1,), dtype=complex), t[..., None], pts], axis=-1)
        w = np.abs(Z) ** 2
        return -np.sum(lam * w, axis=-1) / np.sum(w, axis=-1)

    return field


def ddbar_fd(scalar_field: Callable[[np.ndarray], np.ndarray], zprime: np.ndarray, step=1e-4) -> np.ndarray:
    """d_i dbar_j of a real scalar field by central differences, shape (..., m, m).

    ``step`` is a scalar or has the batch shape of ``zprime``.
    """
    zprime = np.asarray(zprime, dtype=complex)
    m = zprime.shape[-1]
    h = np.asarray(step, dtype=float)
    hv = h[..., None]
    out = np.zeros(zprime.shape[:-1] + (m, m), dtype=complex)
    e = np.eye(m)

    def mixed(u, v):
        # four-point stencil for the second derivative along directions u, v
        pts = np.stack([zprime + hv * (u + v), zprime + hv * (u - v), zprime + hv * (-u + v), zprime - hv * (u + v)], axis=-2)
        vals = np.asarray(scalar_field(pts))
        return (vals[..., 0] - vals[..., 1] - vals[..., 2] + vals[..., 3]) / (4 * h * h)

    for i in range(m):
        for j in range(m):
            ex, ey = e[i], 1j * e[i]
            fx, fy = e[j], 1j * e[j]
            out[..., i, j] = 0.25 * (mixed(ex, fx) + mixed(ey, fy) + 1j * (mixed(ex, fy) - mixed(ey, fx)))
    return out
