"""Dense factorizations and solves for small symmetric systems.

Implements the factorization toolbox the step generator draws from:
Cholesky with completion monitoring, diagonal-pivoting LDL^T in both the
partial-search (Bunch-Kaufman) and full-search (Bunch-Parlett) variants
with a per-pivot audit log, Gaussian elimination with partial pivoting,
and a one-sided Jacobi SVD for diagnostics-scale matrices.

All factorization arithmetic runs through :class:`~ipround.precision.FloatOps`
so reduced-precision runs exercise the same code path.  Matrices here are
tiny (solver systems are at most ``n + 2m``), so the loops are explicit and
deterministic rather than vectorized: reproducibility of the rounding
sequence matters more than speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple, Union

import numpy as np

from .precision import FloatOps, PrecisionConfig, NATIVE

# Pivot-selection threshold for the diagonal-pivoting methods, kept as a
# computed constant (it minimizes the bound on element growth).
PIVOT_NU = (1.0 + math.sqrt(17.0)) / 8.0

# A diagonal entry counts as "huge" (order 1/mu) when it exceeds this
# multiple of 1/mu; the classification is only used for audit logs.
HUGE_DIAGONAL_FACTOR = 0.1

MAG_MODEST = "O(1)"
MAG_HUGE = "Theta(1/mu)"


class SingularPivot(Exception):
    """An exactly singular 1x1 or 2x2 pivot block was encountered."""

    def __init__(self, index: int, message: str = ""):
        self.index = index
        super().__init__(message or f"singular pivot block at step {index}")


class SingularMatrix(Exception):
    """Gaussian elimination met an exactly zero pivot column."""


class ConvergenceFailure(Exception):
    """The Jacobi sweep cap was reached before the Gram matrix diagonalized."""


class PivotKind(Enum):
    ONE_BY_ONE_SMALL = "1x1-modest"
    TWO_BY_TWO = "2x2"
    ONE_BY_ONE_LARGE = "1x1-huge"


@dataclass(frozen=True)
class PivotRecord:
    """One pivot decision: kind, 1-based original row indices, and the
    magnitude class of each diagonal it consumed."""

    kind: PivotKind
    indices: Tuple[int, ...]
    magnitude_class: Tuple[str, ...]


@dataclass(frozen=True)
class CompletionFailure:
    """Cholesky stopped: the pivot at ``pivot_index`` (1-based) came out
    nonpositive.  A normal outcome near the precision floor, not an error."""

    pivot_index: int
    pivot_value: float


@dataclass
class CholeskyFactorization:
    L: np.ndarray  # lower triangular, positive diagonal

    def reconstruct(self) -> np.ndarray:
        return self.L @ self.L.T


@dataclass
class LdltFactorization:
    """P T P^T = L Y L^T with unit lower L and block-diagonal Y.

    ``perm[i]`` is the original row of T that row ``i`` of the permuted
    matrix refers to.  ``block_sizes`` lists the 1x1/2x2 structure of Y in
    order; ``growth_log[k]`` is the max absolute entry of the remaining
    submatrix after ``k`` elimination stages (entry 0 is the input scale).
    """

    perm: np.ndarray
    L: np.ndarray
    Y: np.ndarray
    block_sizes: Tuple[int, ...]
    pivot_log: List[PivotRecord]
    growth_log: List[float] = field(default_factory=list)

    def permuted_input(self, t: np.ndarray) -> np.ndarray:
        return t[np.ix_(self.perm, self.perm)]

    def reconstruct(self) -> np.ndarray:
        return self.L @ self.Y @ self.L.T

    def structure_product(self) -> np.ndarray:
        """P^T |L| |Y| |L^T| P, in the original row/column order."""
        m = np.abs(self.L) @ np.abs(self.Y) @ np.abs(self.L).T
        inv = np.argsort(self.perm)
        return m[np.ix_(inv, inv)]


@dataclass
class GeppFactorization:
    """P A = L U from partial pivoting; ``pivot_rows`` logs, per column,
    the 1-based original row chosen as pivot."""

    perm: np.ndarray
    L: np.ndarray
    U: np.ndarray
    pivot_rows: List[int]
    growth_log: List[float] = field(default_factory=list)


def _classify(value: float, mu: Optional[float]) -> str:
    if mu is not None and mu > 0.0 and abs(value) >= HUGE_DIAGONAL_FACTOR / mu:
        return MAG_HUGE
    return MAG_MODEST


def cholesky(
    a: np.ndarray, cfg: PrecisionConfig = NATIVE
) -> Union[CholeskyFactorization, CompletionFailure]:
    """Factor symmetric ``a`` as L L^T, reading only the lower triangle.

    Returns :class:`CompletionFailure` (with the 1-based pivot index) as a
    value when a computed pivot is nonpositive; this is the expected signal
    that the matrix is indefinite at working precision.
    """
    ops = FloatOps(cfg)
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    L = np.zeros((n, n))
    for j in range(n):
        acc = float(a[j, j])
        for k in range(j):
            acc = ops.sub(acc, ops.mul(L[j, k], L[j, k]))
        if acc <= 0.0:
            return CompletionFailure(pivot_index=j + 1, pivot_value=acc)
        ljj = ops.sqrt(acc)
        L[j, j] = ljj
        for i in range(j + 1, n):
            acc = float(a[i, j])
            for k in range(j):
                acc = ops.sub(acc, ops.mul(L[i, k], L[j, k]))
            L[i, j] = ops.div(acc, ljj)
    return CholeskyFactorization(L=L)


def cholesky_solve(
    f: CholeskyFactorization, b: np.ndarray, cfg: PrecisionConfig = NATIVE
) -> np.ndarray:
    ops = FloatOps(cfg)
    L = f.L
    n = L.shape[0]
    y = np.empty(n)
    for i in range(n):
        acc = float(b[i])
        for k in range(i):
            acc = ops.sub(acc, ops.mul(L[i, k], y[k]))
        y[i] = ops.div(acc, L[i, i])
    x = np.empty(n)
    for i in range(n - 1, -1, -1):
        acc = float(y[i])
        for k in range(i + 1, n):
            acc = ops.sub(acc, ops.mul(L[k, i], x[k]))
        x[i] = ops.div(acc, L[i, i])
    return x


def _swap_symmetric(a: np.ndarray, L: np.ndarray, perm: list, i: int, j: int, k: int) -> None:
    """Exchange rows/columns i and j of the working matrix (full symmetric
    storage), the already-built multiplier rows of L (columns < k), and the
    permutation record."""
    if i == j:
        return
    a[[i, j], :] = a[[j, i], :]
    a[:, [i, j]] = a[:, [j, i]]
    if k > 0:
        L[[i, j], :k] = L[[j, i], :k]
    perm[i], perm[j] = perm[j], perm[i]


def _solve_2x2(r: np.ndarray, b0: float, b1: float, ops: FloatOps, step: int) -> Tuple[float, float]:
    """Solve the 2x2 system r x = b by Gaussian elimination with partial
    pivoting (never the closed-form inverse)."""
    r00, r01, r10, r11 = float(r[0, 0]), float(r[0, 1]), float(r[1, 0]), float(r[1, 1])
    if abs(r10) > abs(r00):
        r00, r01, b0, r10, r11, b1 = r10, r11, b1, r00, r01, b0
    if r00 == 0.0:
        raise SingularPivot(step)
    m = ops.div(r10, r00)
    r11 = ops.sub(r11, ops.mul(m, r01))
    b1 = ops.sub(b1, ops.mul(m, b0))
    if r11 == 0.0:
        raise SingularPivot(step)
    x1 = ops.div(b1, r11)
    x0 = ops.div(ops.sub(b0, ops.mul(r01, x1)), r00)
    return x0, x1


def _eliminate_1x1(a: np.ndarray, L: np.ndarray, ops: FloatOps, k: int, n: int) -> None:
    d = float(a[k, k])
    for i in range(k + 1, n):
        L[i, k] = ops.div(a[i, k], d)
    for j in range(k + 1, n):
        for i in range(j, n):
            v = ops.sub(a[i, j], ops.mul(L[i, k], a[j, k]))
            a[i, j] = v
            a[j, i] = v


def _eliminate_2x2(a: np.ndarray, L: np.ndarray, ops: FloatOps, k: int, n: int) -> None:
    r = a[k : k + 2, k : k + 2]
    for i in range(k + 2, n):
        L[i, k], L[i, k + 1] = _solve_2x2(r, float(a[i, k]), float(a[i, k + 1]), ops, k + 1)
    for j in range(k + 2, n):
        for i in range(j, n):
            v = ops.sub(a[i, j], ops.mul(L[i, k], a[j, k]))
            v = ops.sub(v, ops.mul(L[i, k + 1], a[j, k + 1]))
            a[i, j] = v
            a[j, i] = v


def _remaining_max(a: np.ndarray, k: int) -> float:
    if k >= a.shape[0]:
        return 0.0
    return float(np.max(np.abs(a[k:, k:])))


def _ldlt_common(
    t: np.ndarray,
    cfg: PrecisionConfig,
    mu: Optional[float],
    select,
) -> LdltFactorization:
    ops = FloatOps(cfg)
    a = np.array(t, dtype=float)
    n = a.shape[0]
    perm = list(range(n))
    L = np.eye(n)
    Y = np.zeros((n, n))
    sizes: List[int] = []
    log: List[PivotRecord] = []
    growth = [_remaining_max(a, 0)]
    k = 0
    while k < n:
        step = select(a, L, perm, k, n)  # permutes in place, returns 1 or 2
        if step == 1:
            d = float(a[k, k])
            if d == 0.0:
                raise SingularPivot(k + 1, f"zero 1x1 pivot at step {k + 1}")
            cls = _classify(d, mu)
            kind = PivotKind.ONE_BY_ONE_LARGE if cls == MAG_HUGE else PivotKind.ONE_BY_ONE_SMALL
            log.append(PivotRecord(kind, (perm[k] + 1,), (cls,)))
            Y[k, k] = d
            _eliminate_1x1(a, L, ops, k, n)
        else:
            r = a[k : k + 2, k : k + 2]
            if float(r[0, 0]) * float(r[1, 1]) - float(r[1, 0]) * float(r[0, 1]) == 0.0:
                raise SingularPivot(k + 1, f"singular 2x2 pivot at step {k + 1}")
            log.append(
                PivotRecord(
                    PivotKind.TWO_BY_TWO,
                    (perm[k] + 1, perm[k + 1] + 1),
                    (_classify(float(r[0, 0]), mu), _classify(float(r[1, 1]), mu)),
                )
            )
            Y[k : k + 2, k : k + 2] = r
            _eliminate_2x2(a, L, ops, k, n)
        sizes.append(step)
        k += step
        growth.append(_remaining_max(a, k))
    return LdltFactorization(
        perm=np.array(perm),
        L=L,
        Y=Y,
        block_sizes=tuple(sizes),
        pivot_log=log,
        growth_log=growth,
    )


def _bk_select(a: np.ndarray, L: np.ndarray, perm: list, k: int, n: int) -> int:
    """Partial-search pivot choice on the leading column of the remaining
    matrix.  Ties in the off-diagonal scans go to the smallest index so
    factorizations are deterministic."""
    if k == n - 1:
        return 1
    chi1 = 0.0
    r = k + 1
    for i in range(k + 1, n):
        v = abs(float(a[i, k]))
        if v > chi1:
            chi1, r = v, i
    if abs(float(a[k, k])) >= PIVOT_NU * chi1:
        return 1
    chi_r = 0.0
    for i in range(k, n):
        if i == r:
            continue
        v = abs(float(a[i, r]))
        if v > chi_r:
            chi_r = v
    if chi_r * abs(float(a[k, k])) >= PIVOT_NU * chi1 * chi1:
        return 1
    if abs(float(a[r, r])) >= PIVOT_NU * chi_r:
        _swap_symmetric(a, L, perm, k, r, k)
        return 1
    _swap_symmetric(a, L, perm, k + 1, r, k)
    return 2


def _bp_select(a: np.ndarray, L: np.ndarray, perm: list, k: int, n: int) -> int:
    """Full-search pivot choice: compare the largest remaining diagonal
    against the largest remaining off-diagonal."""
    if k == n - 1:
        return 1
    chi_diag = 0.0
    p = k
    for i in range(k, n):
        v = abs(float(a[i, i]))
        if v > chi_diag:
            chi_diag, p = v, i
    chi_off = 0.0
    rs = (k + 1, k)
    for j in range(k, n):
        for i in range(j + 1, n):
            v = abs(float(a[i, j]))
            if v > chi_off:
                chi_off, rs = v, (i, j)
    if chi_diag >= PIVOT_NU * chi_off:
        _swap_symmetric(a, L, perm, k, p, k)
        return 1
    i, j = rs
    _swap_symmetric(a, L, perm, k, j, k)
    if i == k:
        i = j
    _swap_symmetric(a, L, perm, k + 1, i, k)
    return 2


def bunch_kaufman(
    t: np.ndarray, cfg: PrecisionConfig = NATIVE, mu: Optional[float] = None
) -> LdltFactorization:
    """Diagonal-pivoting LDL^T with the partial (two-column) search.

    ``mu`` is optional context used only to tag pivot magnitudes in the
    audit log (a diagonal is "huge" when it reaches 0.1/mu).
    """
    return _ldlt_common(t, cfg, mu, _bk_select)


def bunch_parlett(
    t: np.ndarray, cfg: PrecisionConfig = NATIVE, mu: Optional[float] = None
) -> LdltFactorization:
    """Diagonal-pivoting LDL^T with the full comparison search.

    Costlier than the partial search but consumes every huge diagonal
    first, as 1x1 pivots, before touching the modest entries.
    """
    return _ldlt_common(t, cfg, mu, _bp_select)


def solve_ldlt(
    f: LdltFactorization, b: np.ndarray, cfg: PrecisionConfig = NATIVE
) -> np.ndarray:
    """Solve T x = b from an LDL^T factorization.

    The 2x2 diagonal blocks are solved by Gaussian elimination with partial
    pivoting, matching the backward-error model of the factorization.
    """
    ops = FloatOps(cfg)
    L, Y, perm = f.L, f.Y, f.perm
    n = L.shape[0]
    y = np.array([float(b[p]) for p in perm])
    w = np.empty(n)
    for i in range(n):
        acc = y[i]
        for k in range(i):
            acc = ops.sub(acc, ops.mul(L[i, k], w[k]))
        w[i] = acc
    k = 0
    for size in f.block_sizes:
        if size == 1:
            d = float(Y[k, k])
            if d == 0.0:
                raise SingularPivot(k + 1)
            w[k] = ops.div(w[k], d)
        else:
            w[k], w[k + 1] = _solve_2x2(Y[k : k + 2, k : k + 2], w[k], w[k + 1], ops, k + 1)
        k += size
    x = np.empty(n)
    for i in range(n - 1, -1, -1):
        acc = w[i]
        for k in range(i + 1, n):
            acc = ops.sub(acc, ops.mul(L[k, i], x[k]))
        x[i] = acc
    out = np.empty(n)
    for i in range(n):
        out[perm[i]] = x[i]
    return out


def gepp_factor(a: np.ndarray, cfg: PrecisionConfig = NATIVE) -> GeppFactorization:
    """LU with partial pivoting; symmetry of the input is ignored."""
    ops = FloatOps(cfg)
    u = np.array(a, dtype=float)
    n = u.shape[0]
    L = np.eye(n)
    perm = list(range(n))
    pivots: List[int] = []
    growth = [float(np.max(np.abs(u)))] if n else [0.0]
    for k in range(n):
        best = abs(float(u[k, k]))
        p = k
        for i in range(k + 1, n):
            v = abs(float(u[i, k]))
            if v > best:
                best, p = v, i
        if best == 0.0:
            raise SingularMatrix(f"zero pivot column {k + 1}")
        if p != k:
            u[[k, p], :] = u[[p, k], :]
            if k > 0:
                L[[k, p], :k] = L[[p, k], :k]
            perm[k], perm[p] = perm[p], perm[k]
        pivots.append(perm[k] + 1)
        for i in range(k + 1, n):
            m = ops.div(u[i, k], u[k, k])
            L[i, k] = m
            u[i, k] = 0.0
            for j in range(k + 1, n):
                u[i, j] = ops.sub(u[i, j], ops.mul(m, u[k, j]))
        growth.append(_remaining_max(u, k + 1))
    return GeppFactorization(
        perm=np.array(perm), L=L, U=u, pivot_rows=pivots, growth_log=growth
    )


def gepp_solve(
    a: np.ndarray, b: np.ndarray, cfg: PrecisionConfig = NATIVE
) -> np.ndarray:
    f = gepp_factor(a, cfg)
    return gepp_apply(f, b, cfg)


def gepp_apply(
    f: GeppFactorization, b: np.ndarray, cfg: PrecisionConfig = NATIVE
) -> np.ndarray:
    ops = FloatOps(cfg)
    L, u, perm = f.L, f.U, f.perm
    n = L.shape[0]
    y = np.empty(n)
    for i in range(n):
        acc = float(b[perm[i]])
        for k in range(i):
            acc = ops.sub(acc, ops.mul(L[i, k], y[k]))
        y[i] = acc
    x = np.empty(n)
    for i in range(n - 1, -1, -1):
        acc = y[i]
        for k in range(i + 1, n):
            acc = ops.sub(acc, ops.mul(u[i, k], x[k]))
        x[i] = ops.div(acc, u[i, i])
    return x


# ---------------------------------------------------------------------------
# One-sided Jacobi SVD (diagnostics scale, native precision)

SVD_MAX_DIM = 16
SVD_SWEEP_CAP = 100
SVD_GRAM_TOL = 1e-14
SVD_NULL_CUT = 1e-8


def svd_small(a: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Full SVD of a small dense matrix by one-sided Jacobi rotations.

    Returns ``(left, sigma, right)`` with ``left`` p-by-p orthogonal,
    ``right`` q-by-q orthogonal, and ``sigma`` the min(p, q) singular
    values in descending order, such that ``a = left @ diag(sigma) @
    right.T`` (rectangular diagonal understood).  Runs in native doubles:
    this is measurement apparatus, never part of the solve pipeline.
    """
    a = np.asarray(a, dtype=float)
    p, q = a.shape
    if p > SVD_MAX_DIM or q > SVD_MAX_DIM:
        raise ValueError(f"svd_small handles at most {SVD_MAX_DIM}x{SVD_MAX_DIM}")
    if p < q:
        right, sigma, left = svd_small(a.T)
        return left, sigma, right

    m = a.copy()
    v = np.eye(q)
    scale = float(np.linalg.norm(a))
    if scale == 0.0:
        return np.eye(p), np.zeros(q), np.eye(q)
    gram_tol = SVD_GRAM_TOL * scale * scale

    for _ in range(SVD_SWEEP_CAP):
        off = 0.0
        for i in range(q - 1):
            for j in range(i + 1, q):
                g_ii = float(m[:, i] @ m[:, i])
                g_jj = float(m[:, j] @ m[:, j])
                g_ij = float(m[:, i] @ m[:, j])
                off = max(off, abs(g_ij))
                if abs(g_ij) <= gram_tol:
                    continue
                zeta = (g_jj - g_ii) / (2.0 * g_ij)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.hypot(1.0, zeta))
                cs = 1.0 / math.hypot(1.0, t)
                sn = cs * t
                mi, mj = m[:, i].copy(), m[:, j].copy()
                m[:, i] = cs * mi - sn * mj
                m[:, j] = sn * mi + cs * mj
                vi, vj = v[:, i].copy(), v[:, j].copy()
                v[:, i] = cs * vi - sn * vj
                v[:, j] = sn * vi + cs * vj
        if off <= gram_tol:
            break
    else:
        raise ConvergenceFailure(
            f"Jacobi sweeps did not converge within {SVD_SWEEP_CAP} passes"
        )

    norms = np.linalg.norm(m, axis=0)
    order = np.argsort(-norms, kind="stable")
    norms = norms[order]
    m = m[:, order]
    v = v[:, order]

    rank = int(np.sum(norms > SVD_NULL_CUT * norms[0])) if norms[0] > 0.0 else 0
    left = np.zeros((p, p))
    for j in range(rank):
        left[:, j] = m[:, j] / norms[j]
    _complete_basis(left, rank)
    return left, norms.copy(), v


def _complete_basis(u: np.ndarray, rank: int) -> None:
    """Extend the first ``rank`` orthonormal columns of ``u`` to a full
    basis by reorthogonalized Gram-Schmidt over the standard basis."""
    p = u.shape[0]
    have = rank
    for k in range(p):
        if have == p:
            return
        cand = np.zeros(p)
        cand[k] = 1.0
        for _ in range(2):
            cand -= u[:, :have] @ (u[:, :have].T @ cand)
        norm = float(np.linalg.norm(cand))
        if norm > 0.5:
            u[:, have] = cand / norm
            have += 1
    if have != p:
        raise ConvergenceFailure("failed to complete orthogonal basis")


def null_space_split(
    a: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """SVD of ``a`` split at the numerical rank.

    Returns ``(range_left, null_left, range_right, null_right, sigma)``:
    the left/right singular blocks for the positive singular values and for
    the (numerically) zero ones, plus the positive values themselves.
    """
    left, sigma, right = svd_small(a)
    smax = sigma[0] if sigma.size else 0.0
    rank = int(np.sum(sigma > SVD_NULL_CUT * smax)) if smax > 0.0 else 0
    return (
        left[:, :rank],
        left[:, rank:],
        right[:, :rank],
        right[:, rank:],
        sigma[:rank].copy(),
    )
