"""Invariant pipelines: exact routes, the integral route to F_q, Chen-Tian invariants, K-energy.

Throughout, m = n - 1 is the dimension of M, alpha = n + 1 - d and
omega_M = alpha * omega is the reference form in c_1(M).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.integrate import simpson

from . import combinatorics as comb
from .forms import CurvatureMatrix, FormPQ, chern_newton, polarization_nabla_x, top_coefficient, wedge
from .geometry import GeometryFrame, potential_curvature
from .montecarlo import McEstimate, SamplePlan, mc_samples, summarize, volume_integrand
from .polynomials import DiagonalField, HomogeneousPolynomial

# stream ids keep the independent Monte Carlo passes on disjoint random numbers
STREAM_LAMBDA = 11
STREAM_THETA = 12
STREAM_CHEN_TIAN = 13
STREAM_POLARIZATION = 14
STREAM_KENERGY = 15


def _ones(fr: GeometryFrame) -> FormPQ:
    return FormPQ.scalar(fr.m, np.ones(fr.g.shape[:-2]))


def chern_top(fr: GeometryFrame, q: int) -> np.ndarray:
    """Top coefficient of c_q(Theta) ^ omega^(m-q) at each frame."""
    w = FormPQ.from_matrix(fr.g)
    Th = CurvatureMatrix.from_tensor(fr.curvature)
    c = chern_newton(Th, q) if q > 0 else _ones(fr)
    return np.real(top_coefficient(wedge(c, w.power(fr.m - q))))


# ---------------------------------------------------------------------------
# integral route to F_q


@dataclass
class InvariantReport:
    n: int
    d: int
    q: int
    kappa: Fraction
    closed: Fraction
    coeff_route: Fraction
    numeric: McEstimate | None = None
    lambda_q: McEstimate | None = None
    lambda_exact: Fraction | None = None

    @property
    def consistent(self) -> bool | None:
        if self.numeric is None:
            return None
        return bool(self.numeric.within(float(self.closed)))


def futaki_numeric(F: HomogeneousPolynomial, X: DiagonalField, q: int, plan: SamplePlan) -> tuple[McEstimate, McEstimate]:
    """F_q = -(m+1-q) int alpha theta_X (c_q - lambda_q omega_M^q) ^ omega_M^(m-q), theta_X = -theta.

    Pass one estimates lambda_q as a ratio of integrals.  Pass two, on an
    independent stream, estimates the theta_X-weighted integrals.

    Replacing theta_X by theta_X - s for a constant s leaves the value
    unchanged, because lambda_q is defined by int (c_q - lambda_q omega_M^q)
    ^ omega_M^(m-q) = 0.  The shift is chosen to minimise the propagated
    variance: a good shift cancels the bulk of the heavy-tailed part of the
    integrand, at the price of more sensitivity to the error in lambda_q.

    Returns ``(F_q estimate, lambda_q estimate)``.
    """
    n, d = F.n, F.d
    m = n - 1
    if not (1 <= q <= m):
        raise comb.DomainError(f"q = {q} outside 1..{m}")
    al = float(n + 1 - d)

    def pair(fr: GeometryFrame) -> np.ndarray:
        c = chern_top(fr, q) * al ** (m - q)
        v = volume_integrand(fr) * al**m
        return np.stack([c, v], axis=-1)

    s1 = mc_samples(F, X, pair, plan, stream=STREAM_LAMBDA)
    cbar, vbar = s1.values.mean(axis=0)
    lam = cbar / vbar
    lam_err = float(np.std(s1.values[:, 0] - lam * s1.values[:, 1], ddof=1) / (math.sqrt(s1.n) * abs(vbar)))
    lam_est = McEstimate(mean=float(lam), stderr=lam_err, n_effective=s1.n, rejected=s1.rejected)

    def weighted(fr: GeometryFrame) -> np.ndarray:
        p = pair(fr)
        th = -al * fr.theta
        return np.concatenate([p * th[:, None], p], axis=-1)

    s2 = mc_samples(F, X, weighted, plan, stream=STREAM_THETA)
    N = s2.n
    a_s, b_s, c_s, v_s = s2.values.T
    D = a_s - lam * b_s
    Q = c_s - lam * v_s
    B, V = b_s.mean(), v_s.mean()
    # total variance as a quadratic in the shift s
    qa = np.var(Q, ddof=1) / N + (V * lam_err) ** 2
    qb = np.cov(D, Q)[0, 1] / N + B * V * lam_err**2
    shift = float(qb / qa) if qa > 1e-300 else 0.0
    k = m + 1 - q
    comb_s = -k * (D - shift * Q)
    mean = float(comb_s.mean())
    var = np.var(comb_s, ddof=1) / N + (k * (B - shift * V) * lam_err) ** 2
    est = McEstimate(mean=mean, stderr=float(math.sqrt(var)), n_effective=N, rejected=s1.rejected + s2.rejected)
    return est, lam_est


def invariant_report(F: HomogeneousPolynomial, X: DiagonalField, q: int, plan: SamplePlan | None = None) -> InvariantReport:
    n, d = F.n, F.d
    rep = InvariantReport(
        n=n, d=d, q=q, kappa=X.kappa,
        closed=comb.bando_futaki_closed(n, d, q, X.kappa),
        coeff_route=comb.bando_futaki_coeff_route(n, d, q, X.kappa),
        lambda_exact=comb.harmonic_ratio(n, d, q),
    )
    if plan is not None:
        rep.numeric, rep.lambda_q = futaki_numeric(F, X, q, plan)
    return rep


def polarization_integral(F: HomogeneousPolynomial, X: DiagonalField, q: int, plan: SamplePlan) -> McEstimate:
    """MC estimate of int q P~^q(grad X, Theta, ...) ^ omega_M^(n-q); zero on M."""
    n, d = F.n, F.d
    al = float(n + 1 - d)

    def integrand(fr: GeometryFrame) -> np.ndarray:
        Th = CurvatureMatrix.from_tensor(fr.curvature)
        P = polarization_nabla_x(fr.nabla_X, Th, q)
        w = FormPQ.from_matrix(al * fr.g)
        return np.real(top_coefficient(wedge(q * P, w.power(n - q))))

    return mc_samples(F, X, integrand, plan, stream=STREAM_POLARIZATION + 100 * q).estimate(0)


# ---------------------------------------------------------------------------
# Chen-Tian invariants


@dataclass
class ChenTianResult:
    k: int
    value: McEstimate
    laplacian_term: McEstimate

    @property
    def ratio(self) -> McEstimate:
        v = self.value
        return McEstimate(mean=v.mean / (self.k + 1), stderr=v.stderr / (self.k + 1), n_effective=v.n_effective, rejected=v.rejected)


def chen_tian(F: HomogeneousPolynomial, X: DiagonalField, k: int, plan: SamplePlan) -> ChenTianResult:
    """F_k = (m-k) int th vol + (k+1) int lap(th) Ric^k om^(m-k) - (m-k) int th Ric^(k+1) om^(m-k-1).

    Evaluated for omega_M with the Hamiltonian th = -alpha theta; its
    omega_M-Laplacian is the frame's lap_theta.
    """
    n, d = F.n, F.d
    m = n - 1
    if not (0 <= k <= m - 1):
        raise comb.DomainError(f"k = {k} outside 0..{m - 1}")
    al = float(n + 1 - d)

    def integrand(fr: GeometryFrame) -> np.ndarray:
        w = FormPQ.from_matrix(al * fr.g)
        ric = FormPQ.from_matrix(fr.ricci)
        th = -al * fr.theta
        lap = np.real(fr.lap_theta)
        vol = np.real(top_coefficient(w.power(m)))
        t2 = np.real(top_coefficient(wedge(ric.power(k), w.power(m - k))))
        t3 = np.real(top_coefficient(wedge(ric.power(k + 1), w.power(m - k - 1))))
        total = (m - k) * th * vol + (k + 1) * lap * t2 - (m - k) * th * t3
        return np.stack([total, (k + 1) * lap * t2], axis=-1)

    ss = mc_samples(F, X, integrand, plan, stream=STREAM_CHEN_TIAN)
    return ChenTianResult(k=k, value=ss.estimate(0), laplacian_term=ss.estimate(1))


def chen_tian_ratios(F, X, plan: SamplePlan) -> list[ChenTianResult]:
    return [chen_tian(F, X, k, plan) for k in range(F.n - 1)]


# ---------------------------------------------------------------------------
# K-energy along paths of metrics


@dataclass(frozen=True)
class PathSpec:
    kind: str  # "automorphism" | "linear"
    t_end: float
    t_steps: int = 5

    def __post_init__(self) -> None:
        if self.kind not in ("automorphism", "linear"):
            raise ValueError(f"unknown path kind {self.kind!r}")
        if self.t_steps < 4:
            raise ValueError("Simpson quadrature needs at least 4 nodes")
        if not (0 <= self.t_end <= 1):
            raise ValueError("t_end must lie in [0, 1]")

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.t_end, self.t_steps)


def _chern_terms_from_curvature(R: np.ndarray, omega: np.ndarray, q: int, lam_q: float) -> np.ndarray:
    """Top coefficient of (c_q - lam_q omega^q) ^ omega^(m-q)."""
    m = omega.shape[-1]
    w = FormPQ.from_matrix(omega)
    cq = chern_newton(CurvatureMatrix.from_tensor(R), q)
    return np.real(top_coefficient(wedge(cq - lam_q * w.power(q), w.power(m - q))))


# sigma_t acts by Z_i -> exp(FLOW lambda_i t) Z_i.  With FLOW = -1 the potential
# phi_t = alpha log(sum e^{2 FLOW lambda t}|Z|^2 / sum |Z|^2) has
# phi_dot = -2 alpha theta_X(sigma_t Z), theta_X = -theta, matching the
# Hamiltonian used by futaki_numeric.
FLOW = -1.0


def _path_weights(lam: np.ndarray, t: float) -> np.ndarray:
    return np.exp(2 * FLOW * lam * t)


def _log_weighted(lam: np.ndarray, Z: np.ndarray, t: float) -> np.ndarray:
    w = _path_weights(lam, t)
    return np.log(np.sum(w * np.abs(Z) ** 2, axis=-1) / np.sum(np.abs(Z) ** 2, axis=-1))


def _theta_at(lam: np.ndarray, Z: np.ndarray, t: float) -> np.ndarray:
    """theta (Hamiltonian of X for sigma_t^* omega_FS) at Z."""
    w = _path_weights(lam, t) * np.abs(Z) ** 2
    return -np.sum(lam * w, axis=-1) / np.sum(w, axis=-1)


def kenergy_node_values(F: HomogeneousPolynomial, X: DiagonalField, q: int, path: PathSpec, fr: GeometryFrame) -> np.ndarray:
    """Inner integrand phi_dot (c_q - lam_q om^q) ^ om^(m-q) at each quadrature node, shape (B, nodes).

    Every metric on either path is alpha ddbar of a combination of
    log sum w_a |Z_a|^2, so its curvature is evaluated exactly by
    ``potential_curvature``.
    """
    n, d = F.n, F.d
    al = float(n + 1 - d)
    lam = X.as_array()
    lam_q = float(comb.harmonic_ratio(n, d, q))
    Z = fr.Z
    T = path.t_end
    ones = np.ones(n + 1)
    wT = _path_weights(lam, T)
    out = np.empty((Z.shape[0], path.t_steps))
    for j, t in enumerate(path.nodes):
        if path.kind == "automorphism":
            g, R = potential_curvature(F, Z, [_path_weights(lam, t)], [1.0])
            phidot = -2 * FLOW * al * _theta_at(lam, Z, t)
        else:
            # phi_t = (t/T) phi_T, so phi_dot = phi_T / T
            s = t / T if T > 0 else 0.0
            g, R = potential_curvature(F, Z, [ones, wT], [1 - s, s])
            phidot = al * _log_weighted(lam, Z, T) / T if T > 0 else np.zeros(Z.shape[0])
        out[:, j] = phidot * _chern_terms_from_curvature(R, al * g, q, lam_q)
    return out


@dataclass
class KEnergyResult:
    path: PathSpec
    q: int
    value: McEstimate
    node_integrals: list[McEstimate] = field(default_factory=list)


def _kenergy_samples(F, X, q, paths: list[PathSpec], plan: SamplePlan):
    """Shared-sample K-energy evaluation for several paths (common random numbers)."""

    def integrand(fr: GeometryFrame) -> np.ndarray:
        cols = [volume_integrand(fr)[:, None]]
        for p in paths:
            cols.append(kenergy_node_values(F, X, q, p, fr))
        return np.concatenate(cols, axis=1)

    return mc_samples(F, X, integrand, plan, stream=STREAM_KENERGY)


def _kenergy_from_samples(values: np.ndarray, paths: list[PathSpec], rejected: int):
    """Per-path K-energy estimates, with (1/V) handled as a ratio estimator."""
    vol = values[:, 0]
    V = vol.mean()
    out = []
    per_sample = []
    col = 1
    for p in paths:
        nodes = values[:, col : col + p.t_steps]
        col += p.t_steps
        integ = simpson(nodes, x=p.nodes, axis=1) if p.t_end > 0 else np.zeros(len(vol))
        M = integ.mean() / V
        # linearised ratio: (integ - M vol) / V
        resid = (integ - M * vol) / V
        est = McEstimate(mean=float(M), stderr=float(np.std(resid, ddof=1) / math.sqrt(len(vol))), n_effective=len(vol), rejected=rejected)
        nodes_est = [summarize(nodes[:, j] / V, rejected) for j in range(p.t_steps)]
        out.append(KEnergyResult(path=p, q=0, value=est, node_integrals=nodes_est))
        per_sample.append(resid + M)
    return out, per_sample


def kenergy(F: HomogeneousPolynomial, X: DiagonalField, q: int, path: PathSpec, plan: SamplePlan) -> KEnergyResult:
    """M_q along ``path`` from omega_M to alpha sigma_T^* omega_FS|_M."""
    ss = _kenergy_samples(F, X, q, [path], plan)
    res, _ = _kenergy_from_samples(ss.values, [path], ss.rejected)
    res[0].q = q
    return res[0]


@dataclass
class PathComparison:
    automorphism: KEnergyResult
    linear: KEnergyResult
    difference: McEstimate

    @property
    def passed(self) -> bool:
        a, l = self.automorphism.value.mean, self.linear.value.mean
        tol = max(0.05 * abs(a), 3 * self.difference.stderr)
        return abs(a - l) <= tol


def kenergy_path_independence(F, X, q: int, t_end: float, t_steps: int, plan: SamplePlan) -> PathComparison:
    paths = [PathSpec("automorphism", t_end, t_steps), PathSpec("linear", t_end, t_steps)]
    ss = _kenergy_samples(F, X, q, paths, plan)
    (ra, rl), (pa, pl) = _kenergy_from_samples(ss.values, paths, ss.rejected)
    ra.q = rl.q = q
    diff = summarize(pa - pl, ss.rejected)
    return PathComparison(automorphism=ra, linear=rl, difference=diff)


@dataclass
class SlopeCheck:
    q: int
    slope: McEstimate
    lhs: McEstimate  # (m+1-q) * slope
    rhs: float  # (2/V) F_q with the exact F_q and V = d
    closed: Fraction

    @property
    def passed(self) -> bool:
        return self.lhs.within(self.rhs)


def kenergy_slope_check(F: HomogeneousPolynomial, X: DiagonalField, q: int, plan: SamplePlan) -> SlopeCheck:
    """Compare (m+1-q) dM_q/dt at t = 0 with (2/V) F_q along the automorphism path."""
    n, d = F.n, F.d
    m = n - 1
    al = float(n + 1 - d)
    lam_q = float(comb.harmonic_ratio(n, d, q))

    def integrand(fr: GeometryFrame) -> np.ndarray:
        phidot = -2 * FLOW * al * fr.theta
        val = phidot * _chern_terms_from_curvature(fr.curvature, al * fr.g, q, lam_q)
        return np.stack([volume_integrand(fr), val], axis=-1)

    ss = mc_samples(F, X, integrand, plan, stream=STREAM_KENERGY + 1)
    vol, val = ss.values[:, 0], ss.values[:, 1]
    V = vol.mean()
    S = val.mean() / V
    resid = (val - S * vol) / V
    slope = McEstimate(mean=float(S), stderr=float(np.std(resid, ddof=1) / math.sqrt(ss.n)), n_effective=ss.n, rejected=ss.rejected)
    k = m + 1 - q
    lhs = McEstimate(mean=k * slope.mean, stderr=k * slope.stderr, n_effective=ss.n, rejected=ss.rejected)
    closed = comb.bando_futaki_closed(n, d, q, X.kappa)
    return SlopeCheck(q=q, slope=slope, lhs=lhs, rhs=2.0 / d * float(closed), closed=closed)
