"""Pointwise algebra of (p,p)-forms and curvature polynomials.

A (p,p)-form in m complex dimensions is stored as a dense coefficient array of
shape ``(..., N, N)`` with ``N = C(m, p)``; rows index the holomorphic
multi-index I, columns the antiholomorphic multi-index J, both running over
``itertools.combinations(range(m), p)`` in lexicographic order.  The form is

    sum_{I,J} c_{IJ} (sqrt(-1)/2pi)^p dz_I ^ dzbar_J

with every dz factor written before every dzbar factor.  Leading axes batch
over sample points.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


class FormError(ValueError):
    pass


class DimensionMismatch(FormError):
    pass


class WrongDegree(FormError):
    pass


@lru_cache(maxsize=None)
def multi_indices(m: int, p: int) -> tuple[tuple[int, ...], ...]:
    return tuple(itertools.combinations(range(m), p))


def _perm_sign(seq) -> int:
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


@lru_cache(maxsize=None)
def _merge_table(m: int, p: int, r: int) -> np.ndarray:
    """T[a, b, c] = sign of sorting I_a + I'_b into the multi-index K_c (0 if they overlap)."""
    A, B, C = multi_indices(m, p), multi_indices(m, r), multi_indices(m, p + r)
    pos = {K: k for k, K in enumerate(C)}
    T = np.zeros((len(A), len(B), len(C)))
    for a, I in enumerate(A):
        for b, J in enumerate(B):
            if set(I) & set(J):
                continue
            T[a, b, pos[tuple(sorted(I + J))]] = _perm_sign(I + J)
    return T


@dataclass(frozen=True)
class FormPQ:
    m: int
    p: int
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        N = math.comb(self.m, self.p)
        if not (0 <= self.p <= self.m) or self.coeffs.shape[-2:] != (N, N):
            raise FormError(f"coefficient shape {self.coeffs.shape} does not fit a ({self.p},{self.p}) form in dim {self.m}")

    @classmethod
    def scalar(cls, m: int, value) -> "FormPQ":
        v = np.asarray(value, dtype=complex)
        return cls(m, 0, v[..., None, None])

    @classmethod
    def from_matrix(cls, mat: np.ndarray) -> "FormPQ":
        """(1,1) form with coefficients mat[..., i, j] on dz_i ^ dzbar_j."""
        mat = np.asarray(mat, dtype=complex)
        return cls(mat.shape[-1], 1, mat)

    @classmethod
    def zeros(cls, m: int, p: int, batch: tuple[int, ...] = ()) -> "FormPQ":
        N = math.comb(m, p)
        return cls(m, p, np.zeros(batch + (N, N), dtype=complex))

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[:-2]

    def __add__(self, other: "FormPQ") -> "FormPQ":
        _same(self, other)
        if self.p != other.p:
            raise WrongDegree("cannot add forms of different degree")
        return FormPQ(self.m, self.p, self.coeffs + other.coeffs)

    def __sub__(self, other: "FormPQ") -> "FormPQ":
        return self + (-1) * other

    def __mul__(self, s) -> "FormPQ":
        s = np.asarray(s)
        return FormPQ(self.m, self.p, self.coeffs * s[..., None, None] if s.ndim else self.coeffs * s)

    __rmul__ = __mul__

    def __xor__(self, other: "FormPQ") -> "FormPQ":
        return wedge(self, other)

    def power(self, k: int) -> "FormPQ":
        out = FormPQ.scalar(self.m, np.ones(self.batch_shape))
        for _ in range(k):
            out = wedge(out, self)
        return out

    def is_real_11(self, tol: float = 1e-12) -> bool:
        if self.p != 1:
            return False
        c = self.coeffs
        return bool(np.all(np.abs(c - np.conj(np.swapaxes(c, -1, -2))) <= tol * max(1.0, np.abs(c).max())))


def _same(A: FormPQ, B: FormPQ) -> None:
    if A.m != B.m:
        raise DimensionMismatch(f"forms live in dimensions {A.m} and {B.m}")


def wedge(A: FormPQ, B: FormPQ) -> FormPQ:
    _same(A, B)
    p, r = A.p, B.p
    if p + r > A.m:
        raise DimensionMismatch(f"degree {p}+{r} exceeds dimension {A.m}")
    T = _merge_table(A.m, p, r)
    sign = -1 if (p * r) % 2 else 1  # moving dz_{I'} past dzbar_J
    c = np.einsum("...ad,...be,abc,def->...cf", A.coeffs, B.coeffs, T, T, optimize=True)
    return FormPQ(A.m, p + r, sign * c)


def wedge_all(forms) -> FormPQ:
    forms = list(forms)
    out = forms[0]
    for f in forms[1:]:
        out = wedge(out, f)
    return out


def top_coefficient(A: FormPQ) -> np.ndarray:
    """h with A = h prod_i (sqrt(-1)/2pi) dz_i ^ dzbar_i."""
    if A.p != A.m:
        raise WrongDegree(f"top coefficient needs p = m = {A.m}, got p = {A.p}")
    sign = -1 if (A.m * (A.m - 1) // 2) % 2 else 1
    return sign * A.coeffs[..., 0, 0]


# ---------------------------------------------------------------------------
# form-valued matrices


@dataclass(frozen=True)
class CurvatureMatrix:
    """m x m matrix of (p,p) forms, coefficients of shape (..., m, m, N, N).

    Entry (k, l) is Theta_k^l, so matrix products read
    (A B)_k^l = sum_j A_k^j ^ B_j^l.
    """

    m: int
    p: int
    entries: np.ndarray

    @classmethod
    def from_tensor(cls, R: np.ndarray) -> "CurvatureMatrix":
        """Theta_k^l = sum_ij R[..., k, l, i, j] dz_i ^ dzbar_j."""
        R = np.asarray(R, dtype=complex)
        return cls(R.shape[-1], 1, R)

    @classmethod
    def identity(cls, m: int, batch: tuple[int, ...] = ()) -> "CurvatureMatrix":
        e = np.broadcast_to(np.eye(m, dtype=complex)[..., None, None], batch + (m, m, 1, 1)).copy()
        return cls(m, 0, e)

    @classmethod
    def from_scalar_matrix(cls, M: np.ndarray) -> "CurvatureMatrix":
        M = np.asarray(M, dtype=complex)
        return cls(M.shape[-1], 0, M[..., None, None])

    def entry(self, k: int, l: int) -> FormPQ:
        return FormPQ(self.m, self.p, self.entries[..., k, l, :, :])

    def __matmul__(self, other: "CurvatureMatrix") -> "CurvatureMatrix":
        p, r = self.p, other.p
        T = _merge_table(self.m, p, r)
        sign = -1 if (p * r) % 2 else 1
        c = np.einsum("...kjad,...jlbe,abc,def->...klcf", self.entries, other.entries, T, T, optimize=True)
        return CurvatureMatrix(self.m, p + r, sign * c)

    def trace(self) -> FormPQ:
        return FormPQ(self.m, self.p, np.einsum("...kkab->...ab", self.entries))


def trace_power(Theta: CurvatureMatrix, j: int) -> FormPQ:
    """phi_j = sum Theta_{i1}^{i2} ^ ... ^ Theta_{ij}^{i1}."""
    if j < 1:
        raise WrongDegree("trace power needs j >= 1")
    P = Theta
    for _ in range(j - 1):
        P = P @ Theta
    return P.trace()


def _batch(Theta: CurvatureMatrix) -> tuple[int, ...]:
    return Theta.entries.shape[:-4]


def chern_newton(Theta: CurvatureMatrix, q: int) -> FormPQ:
    """P^q by the recursion P^q = (1/q) sum_j (-1)^(j-1) phi_j ^ P^(q-j)."""
    P = [FormPQ.scalar(Theta.m, np.ones(_batch(Theta)))]
    phi = [None] + [trace_power(Theta, j) for j in range(1, q + 1)]
    for k in range(1, q + 1):
        acc = FormPQ.zeros(Theta.m, k * Theta.p, _batch(Theta))
        for j in range(1, k + 1):
            acc = acc + (-1) ** (j - 1) * wedge(phi[j], P[k - j])
        P.append((1.0 / k) * acc)
    return P[q]


def chern_direct(Theta: CurvatureMatrix, q: int) -> FormPQ:
    """P^q = (1/q!) sum_sigma sum_i sgn(sigma) Theta_{i1}^{i_sigma(1)} ^ ... .

    Index tuples with a repeated entry cancel in pairs (the entries are even
    forms and commute), so the sum runs over q-element subsets, each subset
    standing for its q! orderings.
    """
    if not (1 <= q <= Theta.m):
        raise WrongDegree(f"q = {q} outside 1..{Theta.m}")
    perms = [(s, _perm_sign(s)) for s in itertools.permutations(range(q))]
    acc = FormPQ.zeros(Theta.m, q * Theta.p, _batch(Theta))
    for S in itertools.combinations(range(Theta.m), q):
        for sigma, sgn in perms:
            term = wedge_all(Theta.entry(S[a], S[sigma[a]]) for a in range(q))
            acc = acc + sgn * term
    return acc


def _cycles(perm: tuple[int, ...]) -> list[list[int]]:
    seen, out = set(), []
    for start in range(len(perm)):
        if start in seen:
            continue
        cyc, x = [], start
        while x not in seen:
            seen.add(x)
            cyc.append(x)
            x = perm[x]
        out.append(cyc)
    return out


def polarization_nabla_x(nabla_X: np.ndarray, Theta: CurvatureMatrix, q: int) -> FormPQ:
    """P~^q(grad X, Theta, ..., Theta), a (q-1, q-1) form.

    ``nabla_X[..., k, l]`` is X^l_k.  The permutation sum over all index tuples
    is evaluated cycle by cycle: the cycle through the first slot contributes
    tr(grad X Theta^(L-1)) and every other cycle of length L contributes
    tr(Theta^L).
    """
    if not (1 <= q <= Theta.m):
        raise WrongDegree(f"q = {q} outside 1..{Theta.m}")
    NX = CurvatureMatrix.from_scalar_matrix(nabla_X)
    mixed = {1: NX.trace()}
    pw = NX
    for L in range(2, q + 1):
        pw = pw @ Theta
        mixed[L] = pw.trace()
    phi = {j: trace_power(Theta, j) for j in range(1, q)}
    acc = FormPQ.zeros(Theta.m, (q - 1) * Theta.p, _batch(Theta))
    for perm in itertools.permutations(range(q)):
        sgn = _perm_sign(perm)
        cyc = _cycles(perm)
        term = mixed[len(cyc[0])]
        for c in cyc[1:]:
            term = wedge(term, phi[len(c)])
        acc = acc + sgn * term
    return (1.0 / math.factorial(q)) * acc


def polarization_newton(nabla_X: np.ndarray, Theta: CurvatureMatrix, q: int) -> FormPQ:
    """Same form via q P~^q = sum_j (-1)^(j-1) tr(grad X Theta^(j-1)) ^ P^(q-j)."""
    NX = CurvatureMatrix.from_scalar_matrix(nabla_X)
    acc = FormPQ.zeros(Theta.m, (q - 1) * Theta.p, _batch(Theta))
    pw = NX
    for j in range(1, q + 1):
        if j > 1:
            pw = pw @ Theta
        rest = chern_newton(Theta, q - j) if q - j > 0 else FormPQ.scalar(Theta.m, np.ones(_batch(Theta)))
        acc = acc + (-1) ** (j - 1) * wedge(pw.trace(), rest)
    return (1.0 / q) * acc


def elementary_symmetric(values: np.ndarray, q: int) -> np.ndarray:
    """e_q of the last axis, via the product expansion of prod (1 + x t)."""
    values = np.asarray(values)
    e = np.zeros(values.shape[:-1] + (q + 1,), dtype=complex)
    e[..., 0] = 1
    for k in range(values.shape[-1]):
        x = values[..., k]
        for j in range(q, 0, -1):
            e[..., j] = e[..., j] + x * e[..., j - 1]
    return e[..., q]


def newton_elementary(A: np.ndarray, q: int) -> np.ndarray:
    """e_q of the eigenvalues of A by the power-sum recursion, without diagonalising."""
    A = np.asarray(A, dtype=complex)
    p = [None]
    M = np.broadcast_to(np.eye(A.shape[-1]), A.shape).astype(complex)
    for _ in range(q):
        M = M @ A
        p.append(np.einsum("...ii->...", M))
    e = [np.ones(A.shape[:-2], dtype=complex)]
    for k in range(1, q + 1):
        e.append(sum((-1) ** (j - 1) * p[j] * e[k - j] for j in range(1, k + 1)) / k)
    return e[q]
