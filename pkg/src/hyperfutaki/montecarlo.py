"""Monte Carlo integration of top-degree forms over M.

Two estimators share one interface.

``line`` (default): a projective line L through two independent standard
Gaussian vectors u, v of C^(n+1) is a uniformly random line, and by the
Crofton formula the expected intersection current E[delta_{L cap M}] equals
omega^m restricted to M.  Hence for a top form eta

    int_M eta = E_L[ sum_{p in L cap M} eta(p) / omega^m(p) ].

The integrand ratio is bounded wherever eta is smooth, which keeps the
variance finite even where the chart projection z' branches.  The volume
integral comes out as exactly d on every line.

``chart``: chart points are drawn from the Fubini-Study density on C^m,

    p(z') = m! / (pi^m (1 + |z'|^2)^(m+1)),

by z'_i = u_i / u_0 with u standard complex Gaussian.  Each chart point is
covered by the finite roots z_1 of f(., z'), so for a top form whose
coefficient in the basis prod (sqrt(-1)/2pi) dz_i ^ dzbar_i is h,

    int_M eta = E_p[ w(z') sum_roots h ],   w(z') = (1 + |z'|^2)^(m+1) / m!.

This estimator is kept for comparison; its second moment diverges
logarithmically near the branch locus F_1 = 0 for integrands that do not
vanish there.

Random numbers come from a counter-based Philox stream keyed by the seed and a
stream id; sample ``index`` always receives the same normals, so results do
not depend on how the work is split across threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .geometry import CHART_GUARD, WELL_CONDITIONED, GeometryFrame, batch_fiber_roots, chart_condition, frames, line_points
from .polynomials import DiagonalField, HomogeneousPolynomial, eval_with_derivs

BLOCK = 4096
MASK64 = (1 << 64) - 1


class BudgetExhausted(RuntimeError):
    pass


@dataclass(frozen=True)
class SamplePlan:
    sample_count: int
    base_seed: int = 0
    rejection_budget: int | None = None
    workers: int = 1
    method: str = "line"

    def __post_init__(self) -> None:
        if self.method not in ("line", "chart"):
            raise ValueError(f"unknown sampling method {self.method!r}")
        if self.sample_count < 2:
            raise ValueError("need at least two samples for a standard error")

    @property
    def budget(self) -> int:
        return self.rejection_budget if self.rejection_budget is not None else 10 * self.sample_count


@dataclass(frozen=True)
class McEstimate:
    mean: complex | float
    stderr: float
    n_effective: int
    rejected: int

    def within(self, target: float, k: float = 3.0) -> bool:
        # rounding floor: zero-variance estimates (exact integrands) still carry ~1e-15 noise
        floor = 1e-10 * max(1.0, abs(target))
        return abs(self.mean - target) <= k * self.stderr + floor

    def to_dict(self) -> dict:
        mean = complex(self.mean)
        out = {"mean": mean.real, "stderr": float(self.stderr), "n_effective": int(self.n_effective), "rejected": int(self.rejected)}
        if abs(mean.imag) > 0:
            out["mean_imag"] = mean.imag
        return out


def _generator(seed: int, stream: int, block: int) -> np.random.Generator:
    key = (int(seed) & MASK64) | ((int(stream) & MASK64) << 64)
    counter = np.array([0, 0, 0, block], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def gaussian_block(seed: int, stream: int, block: int, m: int) -> np.ndarray:
    """Standard complex Gaussians u for indices block*BLOCK .. (block+1)*BLOCK - 1, shape (BLOCK, m+1)."""
    x = _generator(seed, stream, block).standard_normal((BLOCK, m + 1, 2))
    return (x[..., 0] + 1j * x[..., 1]) / math.sqrt(2.0)


def line_block(seed: int, stream: int, block: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian pairs (u, v) spanning the lines for one block, each of shape (BLOCK, n+1)."""
    x = _generator(seed, stream, block).standard_normal((BLOCK, 2, n + 1, 2))
    z = x[..., 0] + 1j * x[..., 1]
    return z[:, 0], z[:, 1]


def importance_weight(zprime: np.ndarray) -> np.ndarray:
    m = zprime.shape[-1]
    return (1 + np.sum(np.abs(zprime) ** 2, axis=-1)) ** (m + 1) / math.factorial(m)


def sample_zprime(seed: int, index: int, m: int, stream: int = 0):
    """Chart point and importance weight for one sample index.

    Returns ``(zprime, weight)``, or ``(None, None)`` when |u_0| is too small
    (the caller moves on to the next index).
    """
    block, row = divmod(int(index), BLOCK)
    u = gaussian_block(seed, stream, block, m)[row]
    if abs(u[0]) < 1e-12:
        return None, None
    zp = u[1:] / u[0]
    return zp, float(importance_weight(zp))


Integrand = Callable[[GeometryFrame], np.ndarray]


@dataclass
class BlockResult:
    values: np.ndarray  # (accepted, K) weighted per-sample values
    accepted: np.ndarray  # bool mask over the block


def _chart_points(F: HomogeneousPolynomial, seed: int, stream: int, block: int):
    m = F.n - 1
    u = gaussian_block(seed, stream, block, m)
    ok = np.abs(u[:, 0]) >= 1e-12
    u0 = np.where(ok, u[:, 0], 1.0)
    zp = u[:, 1:] / u0[:, None]
    roots, fib_ok = batch_fiber_roots(F, zp)
    ok &= fib_ok
    r = roots.shape[1]
    if r == 0:
        raise BudgetExhausted("the chart projection has no finite fibers")
    Z = np.empty((BLOCK, r, F.n + 1), dtype=complex)
    Z[:, :, 0] = 1
    Z[:, :, 1] = roots
    Z[:, :, 2:] = zp[:, None, :]
    return Z, ok, importance_weight(zp)


def evaluate_block(
    F: HomogeneousPolynomial,
    lambdas: np.ndarray,
    integrand: Integrand,
    seed: int,
    stream: int,
    block: int,
    method: str = "line",
) -> BlockResult:
    if method == "line":
        u, v = line_block(seed, stream, block, F.n)
        Z, ok = line_points(F, u, v)
        weight = None
    else:
        Z, ok, weight = _chart_points(F, seed, stream, block)
    r = Z.shape[1]
    idx = np.nonzero(ok)[0]
    Zb = Z[idx]
    _, grad = eval_with_derivs(F, Zb, order=1)
    qual = np.abs(grad[..., 1]) ** 2 / np.sum(np.abs(grad) ** 2, axis=-1)
    good = np.all(qual >= CHART_GUARD, axis=1)
    idx = idx[good]
    accepted = np.zeros(BLOCK, dtype=bool)
    if len(idx) == 0:
        return BlockResult(values=np.zeros((0, 1)), accepted=accepted)
    fr = frames(F, lambdas, Zb[good].reshape(-1, F.n + 1))
    h = np.asarray(integrand(fr))
    if h.ndim == 1:
        h = h[:, None]
    if weight is None:
        h = h / volume_integrand(fr)[:, None]
        w = np.ones(len(idx))
    else:
        w = weight[idx]
    h = h.reshape(len(idx), r, -1).sum(axis=1)
    finite = np.all(np.isfinite(h), axis=1)
    accepted[idx[finite]] = True
    return BlockResult(values=(w[:, None] * h)[finite], accepted=accepted)


@dataclass
class SampleSet:
    """Per-sample weighted integrand values in index order."""

    values: np.ndarray  # (N, K)
    rejected: int

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def estimate(self, column: int | np.ndarray = 0) -> McEstimate:
        v = self.values[:, column] if np.ndim(column) == 0 else self.values @ np.asarray(column)
        return summarize(v, self.rejected)


def summarize(v: np.ndarray, rejected: int = 0) -> McEstimate:
    n = len(v)
    mean = np.mean(v)
    if np.all(np.abs(np.imag(v)) == 0):
        mean = float(np.real(mean))
        v = np.real(v)
    err = float(np.std(v, ddof=1) / math.sqrt(n)) if n > 1 else float("inf")
    return McEstimate(mean=mean, stderr=err, n_effective=n, rejected=rejected)


def mc_samples(
    F: HomogeneousPolynomial,
    X: DiagonalField | Sequence[float] | None,
    integrand: Integrand,
    plan: SamplePlan,
    stream: int = 0,
) -> SampleSet:
    """Collect ``plan.sample_count`` accepted samples of a (possibly vector) integrand."""
    if X is None:
        lam = np.zeros(F.n + 1)
    elif isinstance(X, DiagonalField):
        lam = X.as_array()
    else:
        lam = np.asarray(X, dtype=float)
    N = plan.sample_count
    limit = N + plan.budget
    nblocks_max = -(-limit // BLOCK)
    collected: list[np.ndarray] = []
    masks: list[np.ndarray] = []
    have = 0
    block = 0
    workers = max(1, int(plan.workers))
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        while have < N and block < nblocks_max:
            need_blocks = max(1, min(nblocks_max - block, -(-(N - have) // BLOCK)))
            ids = range(block, block + need_blocks)
            if pool is None:
                results = [evaluate_block(F, lam, integrand, plan.base_seed, stream, b, plan.method) for b in ids]
            else:
                results = list(pool.map(lambda b: evaluate_block(F, lam, integrand, plan.base_seed, stream, b, plan.method), ids))
            for res in results:
                collected.append(res.values)
                masks.append(res.accepted)
                have += res.values.shape[0]
            block += need_blocks
    finally:
        if pool is not None:
            pool.shutdown()
    mask = np.concatenate(masks)[:limit]
    if mask.sum() < N:
        raise BudgetExhausted(f"only {int(mask.sum())} of {N} samples accepted within {limit} draws")
    values = np.concatenate(collected, axis=0)[:N]
    last = np.nonzero(mask)[0][N - 1]
    rejected = int(last + 1 - N)
    return SampleSet(values=values, rejected=rejected)


def mc_integrate(F, X, integrand: Integrand, plan: SamplePlan, stream: int = 0) -> McEstimate:
    return mc_samples(F, X, integrand, plan, stream).estimate(0)


# ---------------------------------------------------------------------------
# calibration


def volume_integrand(fr: GeometryFrame) -> np.ndarray:
    """Top coefficient of omega^m, i.e. m! det g."""
    return math.factorial(fr.m) * np.real(np.linalg.det(fr.g))


def hamiltonian_integrand(fr: GeometryFrame) -> np.ndarray:
    return fr.theta * volume_integrand(fr)


@dataclass
class CalibrationReport:
    degree: McEstimate
    degree_exact: int
    hamiltonian: McEstimate
    hamiltonian_exact: float
    kappa_min: float
    kappa_max: float
    kappa: float
    samples: int = field(default=0)

    @property
    def kappa_spread(self) -> float:
        return self.kappa_max - self.kappa_min

    @property
    def passed(self) -> bool:
        return (
            self.degree.within(self.degree_exact)
            and self.hamiltonian.within(self.hamiltonian_exact)
            and max(abs(self.kappa_max - self.kappa), abs(self.kappa_min - self.kappa)) <= 1e-8 * max(1.0, abs(self.kappa))
        )


STREAM_KAPPA = 31
KAPPA_POINTS = 4096


def sample_points(F: HomogeneousPolynomial, count: int, seed: int = 0, max_condition: float = WELL_CONDITIONED, stream: int = 0):
    """``count`` points of M from chart draws, keeping roots with chart_condition <= max_condition.

    Returns ``(Z, rejected)``; Z has shape (count, n+1).
    """
    kept: list[np.ndarray] = []
    have = rejected = 0
    block = 0
    max_blocks = max(4, 40 * (-(-count // BLOCK)))
    while have < count:
        if block >= max_blocks:
            raise BudgetExhausted(f"only {have} of {count} well-conditioned points found")
        Z, ok, _ = _chart_points(F, seed, stream, block)
        block += 1
        r = Z.shape[1]
        rejected += int(np.sum(~ok)) * r
        Z = Z[ok].reshape(-1, F.n + 1)
        good = chart_condition(F, Z) <= max_condition
        rejected += int(np.sum(~good))
        kept.append(Z[good])
        have += int(np.sum(good))
    return np.concatenate(kept)[:count], rejected


def calibrate(F: HomogeneousPolynomial, X: DiagonalField, plan: SamplePlan, stream: int = 0) -> CalibrationReport:
    """Degree and Hamiltonian integrals by Monte Carlo, plus the pointwise kappa range.

    The kappa range is taken on a fixed set of well-conditioned points so it
    does not depend on how many blocks the sampler happened to evaluate.
    """
    d, n = F.d, F.n

    def integrand(fr: GeometryFrame) -> np.ndarray:
        vol = volume_integrand(fr)
        return np.stack([vol, fr.theta * vol], axis=-1)

    ss = mc_samples(F, X, integrand, plan, stream)
    Z, _ = sample_points(F, min(plan.sample_count, KAPPA_POINTS), plan.base_seed, stream=STREAM_KAPPA)
    fr = frames(F, X.as_array(), Z)
    kap = np.real(-(fr.div_X - fr.X_xi - (n - d + 1) * fr.theta))
    return CalibrationReport(
        degree=ss.estimate(0),
        degree_exact=d,
        hamiltonian=ss.estimate(1),
        hamiltonian_exact=float(X.kappa) / n,
        kappa_min=float(kap.min()),
        kappa_max=float(kap.max()),
        kappa=float(X.kappa),
        samples=ss.n,
    )
