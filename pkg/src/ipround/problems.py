"""Built-in inequality-constrained test problems and their known solutions.

Each problem supplies closed-form evaluators for the objective, the
constraints, and their first and second derivatives.  The evaluators take
an optional :class:`~ipround.precision.FloatOps` and perform every
elementary operation through it, with the constraint expressions written
exactly as in the problem statements: how those expressions round is part
of what the package measures, so no algebraic simplification is applied.

Constraint and active-set indices are 0-based throughout the code; audit
logs report 1-based positions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from .linalg import null_space_split
from .precision import FloatOps, NATIVE_OPS


@dataclass(frozen=True)
class SvdBasis:
    """Singular value decomposition of the active-constraint Jacobian at
    the solution, split at the numerical rank.

    ``u_hat`` (n x r) spans the range of the Jacobian, ``v_hat`` its
    orthogonal complement; ``u`` (|B| x r) and ``v`` (|B| x (|B| - r)) are
    the corresponding multiplier-space blocks.  The columns of ``v`` span
    the null space of the Jacobian: the subspace where computed multiplier
    steps lose accuracy first.
    """

    u_hat: np.ndarray
    v_hat: np.ndarray
    u: np.ndarray
    v: np.ndarray
    sigma: np.ndarray


@dataclass(frozen=True)
class KnownSolution:
    """Reference primal solution with its multiplier set.

    The optimal multipliers restricted to the active components form the
    segment ``{x >= 0 : a . x = b}`` described by ``multiplier_affine``.
    ``strictly_complementary`` records whether every active constraint has
    a positive multiplier somewhere on that segment.
    """

    z_star: np.ndarray
    active_set: Tuple[int, ...]
    inactive_set: Tuple[int, ...]
    multiplier_affine: Tuple[np.ndarray, float]
    svd: SvdBasis
    strictly_complementary: bool


@dataclass(frozen=True)
class NlpProblem:
    """min phi(z) subject to g(z) <= 0, with analytic derivatives.

    ``jac_g`` columns are the constraint gradients (an n-by-m matrix).
    All evaluators are pure; passing the same ``z`` and ops yields
    bit-identical results.
    """

    name: str
    n: int
    m: int
    _phi: Callable
    _grad_phi: Callable
    _hess_phi: Callable
    _g: Callable
    _jac_g: Callable
    _hess_g: Callable

    def eval_phi(self, z, ops: FloatOps = NATIVE_OPS) -> float:
        return self._phi(np.asarray(z, dtype=float), ops)

    def eval_grad_phi(self, z, ops: FloatOps = NATIVE_OPS) -> np.ndarray:
        return self._grad_phi(np.asarray(z, dtype=float), ops)

    def eval_hess_phi(self, z, ops: FloatOps = NATIVE_OPS) -> np.ndarray:
        return self._hess_phi(np.asarray(z, dtype=float), ops)

    def eval_g(self, z, ops: FloatOps = NATIVE_OPS) -> np.ndarray:
        return self._g(np.asarray(z, dtype=float), ops)

    def eval_jac_g(self, z, ops: FloatOps = NATIVE_OPS) -> np.ndarray:
        return self._jac_g(np.asarray(z, dtype=float), ops)

    def eval_hess_g(self, z, i: int, ops: FloatOps = NATIVE_OPS) -> np.ndarray:
        return self._hess_g(np.asarray(z, dtype=float), i, ops)


@dataclass(frozen=True)
class Iterate:
    """Strictly interior primal-dual point (z, lambda, s)."""

    z: np.ndarray
    lam: np.ndarray
    s: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "z", np.asarray(self.z, dtype=float))
        object.__setattr__(self, "lam", np.asarray(self.lam, dtype=float))
        object.__setattr__(self, "s", np.asarray(self.s, dtype=float))
        if not (np.all(self.lam > 0.0) and np.all(self.s > 0.0)):
            raise ValueError("iterate must have strictly positive lambda and s")


@dataclass(frozen=True)
class Residuals:
    """Stationarity residual, primal feasibility residual, and the duality
    measure mu = lambda . s / m."""

    r_f: np.ndarray
    r_g: np.ndarray
    mu: float


def eval_residuals(problem: NlpProblem, it: Iterate, ops: FloatOps = NATIVE_OPS) -> Residuals:
    gp = problem.eval_grad_phi(it.z, ops)
    jac = problem.eval_jac_g(it.z, ops)
    gv = problem.eval_g(it.z, ops)
    r_f = np.empty(problem.n)
    for j in range(problem.n):
        acc = float(gp[j])
        for i in range(problem.m):
            acc = ops.add(acc, ops.mul(jac[j, i], it.lam[i]))
        r_f[j] = acc
    r_g = np.empty(problem.m)
    for i in range(problem.m):
        r_g[i] = ops.add(gv[i], it.s[i])
    mu = ops.div(ops.dot(it.lam, it.s), ops.c(float(problem.m)))
    return Residuals(r_f=r_f, r_g=r_g, mu=mu)


def lagrangian_hessian(
    problem: NlpProblem, z, lam, ops: FloatOps = NATIVE_OPS
) -> np.ndarray:
    """Hessian of the Lagrangian: hess(phi) + sum_i lambda_i hess(g_i),
    accumulated in ascending constraint order."""
    h = np.array(problem.eval_hess_phi(z, ops), dtype=float)
    n = problem.n
    for i in range(problem.m):
        hi = problem.eval_hess_g(z, i, ops)
        li = float(lam[i])
        for a in range(n):
            for b in range(n):
                h[a, b] = ops.add(h[a, b], ops.mul(li, hi[a, b]))
    return h


def _known_solution(
    problem: NlpProblem,
    z_star: np.ndarray,
    active: Tuple[int, ...],
    affine: Tuple[np.ndarray, float],
    strictly_complementary: bool,
) -> KnownSolution:
    inactive = tuple(i for i in range(problem.m) if i not in active)
    jac = problem.eval_jac_g(z_star)
    grad_active = jac[:, list(active)]
    u_hat, v_hat, u, v, sigma = null_space_split(grad_active)
    return KnownSolution(
        z_star=np.asarray(z_star, dtype=float),
        active_set=active,
        inactive_set=inactive,
        multiplier_affine=(np.asarray(affine[0], dtype=float), float(affine[1])),
        svd=SvdBasis(u_hat=u_hat, v_hat=v_hat, u=u, v=v, sigma=sigma),
        strictly_complementary=strictly_complementary,
    )


# ---------------------------------------------------------------------------
# Linear objective over two tangent disks.  The active gradients at the
# solution are parallel, so the optimal multipliers form a segment instead
# of a point; the constraint qualification is the weak (MFCQ) one.

def _circles_g(z, ops):
    z1, z2 = float(z[0]), float(z[1])
    t1 = ops.sub(z1, ops.c(1.0 / 3.0))
    g1 = ops.sub(ops.add(ops.mul(t1, t1), ops.mul(z2, z2)), ops.c(1.0 / 9.0))
    t2 = ops.sub(z1, ops.c(2.0 / 3.0))
    g2 = ops.sub(ops.add(ops.mul(t2, t2), ops.mul(z2, z2)), ops.c(4.0 / 9.0))
    return np.array([g1, g2])


def _circles_jac(z, ops):
    z1, z2 = float(z[0]), float(z[1])
    two = ops.c(2.0)
    d1 = ops.mul(two, ops.sub(z1, ops.c(1.0 / 3.0)))
    d2 = ops.mul(two, ops.sub(z1, ops.c(2.0 / 3.0)))
    dz2 = ops.mul(two, z2)
    return np.array([[d1, d2], [dz2, dz2]])


def _circles_hess_g(z, i, ops):
    two = ops.c(2.0)
    return np.array([[two, 0.0], [0.0, two]])


def _linear_phi(z, ops):
    return float(z[0])


def _linear_grad(z, ops):
    return np.array([1.0, 0.0])


def _zero_hess2(z, ops):
    return np.zeros((2, 2))


def make_two_circles() -> Tuple[NlpProblem, KnownSolution]:
    problem = NlpProblem(
        name="two-circles",
        n=2,
        m=2,
        _phi=_linear_phi,
        _grad_phi=_linear_grad,
        _hess_phi=_zero_hess2,
        _g=_circles_g,
        _jac_g=_circles_jac,
        _hess_g=_circles_hess_g,
    )
    known = _known_solution(
        problem,
        np.zeros(2),
        active=(0, 1),
        affine=(np.array([2.0, 4.0]), 3.0),
        strictly_complementary=True,
    )
    return problem, known


# Variant with the second disk replaced by a scaled, shifted copy that has
# the same value, gradient, and curvature footprint at the solution but an
# irrational constant term.  Evaluating it in floating point leaves
# rounding residue that the original pair of constraints happens to cancel.

def _circles_mod_g(z, ops):
    z1, z2 = float(z[0]), float(z[1])
    t1 = ops.sub(z1, ops.c(1.0 / 3.0))
    g1 = ops.sub(ops.add(ops.mul(t1, t1), ops.mul(z2, z2)), ops.c(1.0 / 9.0))
    r5 = ops.sqrt(ops.c(5.0))
    coef = ops.div(ops.c(2.0), ops.mul(ops.c(3.0), r5))
    t2 = ops.sub(z1, r5)
    quad = ops.add(ops.mul(coef, ops.mul(t2, t2)), ops.mul(z2, z2))
    g2 = ops.sub(quad, ops.div(ops.mul(ops.c(2.0), r5), ops.c(3.0)))
    return np.array([g1, g2])


def _circles_mod_jac(z, ops):
    z1, z2 = float(z[0]), float(z[1])
    two = ops.c(2.0)
    d1 = ops.mul(two, ops.sub(z1, ops.c(1.0 / 3.0)))
    r5 = ops.sqrt(ops.c(5.0))
    coef = ops.div(ops.c(2.0), ops.mul(ops.c(3.0), r5))
    d2 = ops.mul(ops.mul(two, coef), ops.sub(z1, r5))
    dz2 = ops.mul(two, z2)
    return np.array([[d1, d2], [dz2, dz2]])


def _circles_mod_hess_g(z, i, ops):
    two = ops.c(2.0)
    if i == 0:
        return np.array([[two, 0.0], [0.0, two]])
    r5 = ops.sqrt(ops.c(5.0))
    coef = ops.div(ops.c(2.0), ops.mul(ops.c(3.0), r5))
    return np.array([[ops.mul(two, coef), 0.0], [0.0, two]])


def make_two_circles_modified() -> Tuple[NlpProblem, KnownSolution]:
    problem = NlpProblem(
        name="two-circles-mod",
        n=2,
        m=2,
        _phi=_linear_phi,
        _grad_phi=_linear_grad,
        _hess_phi=_zero_hess2,
        _g=_circles_mod_g,
        _jac_g=_circles_mod_jac,
        _hess_g=_circles_mod_hess_g,
    )
    known = _known_solution(
        problem,
        np.zeros(2),
        active=(0, 1),
        affine=(np.array([2.0, 4.0]), 3.0),
        strictly_complementary=True,
    )
    return problem, known


# Scalar quadratic with its only multiplier pinned at zero.  Strict
# complementarity fails, so distance-to-solution scales like sqrt(mu)
# instead of mu; kept as the worked counterexample for that rate.

def _scalar_phi(z, ops):
    z1 = float(z[0])
    return ops.mul(ops.c(0.5), ops.mul(z1, z1))


def _scalar_grad(z, ops):
    return np.array([float(z[0])])


def _scalar_hess(z, ops):
    return np.array([[1.0]])


def _scalar_g(z, ops):
    return np.array([-float(z[0])])


def _scalar_jac(z, ops):
    return np.array([[-1.0]])


def _scalar_hess_g(z, i, ops):
    return np.array([[0.0]])


def make_scalar_quadratic() -> Tuple[NlpProblem, KnownSolution]:
    problem = NlpProblem(
        name="scalar-quadratic",
        n=1,
        m=1,
        _phi=_scalar_phi,
        _grad_phi=_scalar_grad,
        _hess_phi=_scalar_hess,
        _g=_scalar_g,
        _jac_g=_scalar_jac,
        _hess_g=_scalar_hess_g,
    )
    known = _known_solution(
        problem,
        np.zeros(1),
        active=(0,),
        affine=(np.array([1.0]), 0.0),
        strictly_complementary=False,
    )
    return problem, known


PROBLEMS: Dict[str, Callable[[], Tuple[NlpProblem, KnownSolution]]] = {
    "two-circles": make_two_circles,
    "two-circles-mod": make_two_circles_modified,
    "scalar-quadratic": make_scalar_quadratic,
}


def standard_start(name: str) -> Iterate:
    """Interior starting point used by the reference experiments."""
    if name in ("two-circles", "two-circles-mod"):
        return Iterate(
            z=np.array([1.0 / 30.0, 1.0 / 9.0]),
            lam=np.array([1.0, 1.0 / 5.0]),
            s=np.array([1.0 / 10.0, 1.0 / 2.0]),
        )
    if name == "scalar-quadratic":
        eps = 1e-3
        return Iterate(z=np.array([eps]), lam=np.array([eps]), s=np.array([eps]))
    raise KeyError(f"unknown problem {name!r}")
