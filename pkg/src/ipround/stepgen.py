"""Assembly and solution of the Newton-like step equations.

Three algebraically equivalent formulations of the same linear system are
supported: the ``full`` block system in (dz, dlambda, ds), the symmetric
``augmented`` system in (dz, dlambda) obtained by eliminating ds, and the
``condensed`` primal-only system obtained by also eliminating dlambda.
They respond very differently to roundoff, which is the point.

Accumulation orders are pinned down (constraints in ascending index order,
left-to-right sums) so a given configuration reproduces the same bit
pattern on every run.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np

from . import linalg
from .linalg import (
    CompletionFailure,
    GeppFactorization,
    LdltFactorization,
    PivotRecord,
    SingularMatrix,
    SingularPivot,
)
from .precision import FloatOps, NonFiniteError, PrecisionConfig, NATIVE
from .problems import Iterate, KnownSolution, NlpProblem, lagrangian_hessian

FORMULATIONS = ("full", "augmented", "condensed")
SOLVERS = ("cholesky", "bunch-kaufman", "bunch-parlett", "gepp")
T_RULES = ("mu-squared", "centering")

DEFAULT_SOLVER = {
    "condensed": "cholesky",
    "augmented": "bunch-kaufman",
    "full": "gepp",
}


@dataclass(frozen=True)
class StepConfig:
    """Step-equation configuration.

    ``t_rule`` picks the deviation from the pure Newton right-hand side:
    ``mu-squared`` uses t = mu^2 e, ``centering`` uses t = sigma mu e.
    ``solver`` of None means the default for the formulation.
    """

    formulation: str = "condensed"
    solver: Optional[str] = None
    t_rule: str = "mu-squared"
    sigma: float = 0.0

    def __post_init__(self):
        if self.formulation not in FORMULATIONS:
            raise ValueError(f"unknown formulation {self.formulation!r}")
        if self.solver is not None and self.solver not in SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}")
        if self.t_rule not in T_RULES:
            raise ValueError(f"unknown t rule {self.t_rule!r}")
        if self.t_rule == "centering" and not 0.0 <= self.sigma <= 1.0:
            raise ValueError("centering parameter must lie in [0, 1]")
        if self.formulation == "full" and self.solver not in (None, "gepp"):
            raise ValueError("the full system is unsymmetric; only gepp applies")

    @property
    def effective_solver(self) -> str:
        return self.solver or DEFAULT_SOLVER[self.formulation]


@dataclass
class AssembledSystem:
    """One assembled step system plus the pieces needed to recover the
    eliminated unknowns.

    ``d`` is the diagonal scaling s_i / lambda_i appearing in the
    augmented block; ``d_inv`` is its elementwise reciprocal lambda_i / s_i
    computed directly (not by dividing 1 by ``d``), which is what the
    condensed form and the multiplier recovery actually use.
    """

    formulation: str
    matrix: np.ndarray
    rhs: np.ndarray
    mu: float
    t: np.ndarray
    d: np.ndarray
    d_inv: np.ndarray
    lam_inv_t: np.ndarray
    g: np.ndarray
    jac: np.ndarray
    hess_lag: np.ndarray
    partition: Optional[Tuple[Tuple[int, ...], Tuple[int, ...]]] = None


@dataclass(frozen=True)
class Step:
    dz: np.ndarray
    dlambda: np.ndarray
    ds: np.ndarray

    def __post_init__(self):
        for part in (self.dz, self.dlambda, self.ds):
            if not np.all(np.isfinite(part)):
                raise ValueError("step contains non-finite entries")

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.dz, self.dlambda, self.ds])


@dataclass
class StepResult:
    """Computed step plus solver metadata for the trace."""

    step: Step
    system: AssembledSystem
    pivot_log: List[PivotRecord] = field(default_factory=list)
    row_pivots: List[int] = field(default_factory=list)


class StepFailure(Exception):
    """The linear solve for a step broke down (indefinite matrix, singular
    pivot, or non-finite arithmetic); carries the iterate's mu for
    context since breakdown is expected once mu reaches the precision
    floor."""

    def __init__(self, reason: str, mu: float):
        self.reason = reason
        self.mu = mu
        super().__init__(f"{reason} (mu = {mu:.3e})")


def _t_vector(mu: float, cfg: StepConfig, ops: FloatOps, m: int) -> np.ndarray:
    if cfg.t_rule == "mu-squared":
        val = ops.mul(mu, mu)
    else:
        val = ops.mul(ops.c(cfg.sigma), mu)
    return np.full(m, val)


def assemble(
    problem: NlpProblem,
    it: Iterate,
    cfg: StepConfig,
    pcfg: PrecisionConfig = NATIVE,
    known: Optional[KnownSolution] = None,
) -> AssembledSystem:
    """Evaluate the problem data at ``it`` and build the requested
    formulation, every elementary operation routed through ``pcfg``."""
    ops = FloatOps(pcfg)
    n, m = problem.n, problem.m
    lam, s = it.lam, it.s

    gv = problem.eval_g(it.z, ops)
    jac = problem.eval_jac_g(it.z, ops)
    gp = problem.eval_grad_phi(it.z, ops)
    hess = lagrangian_hessian(problem, it.z, lam, ops)

    r_f = np.empty(n)
    for j in range(n):
        acc = float(gp[j])
        for i in range(m):
            acc = ops.add(acc, ops.mul(jac[j, i], lam[i]))
        r_f[j] = acc

    mu = ops.div(ops.dot(lam, s), ops.c(float(m)))
    t = _t_vector(mu, cfg, ops, m)

    d = np.array([ops.div(s[i], lam[i]) for i in range(m)])
    d_inv = np.array([ops.div(lam[i], s[i]) for i in range(m)])
    lam_inv_t = np.array([ops.div(t[i], lam[i]) for i in range(m)])

    partition = (known.active_set, known.inactive_set) if known is not None else None

    if cfg.formulation == "augmented":
        mat = np.zeros((n + m, n + m))
        mat[:n, :n] = hess
        mat[:n, n:] = jac
        mat[n:, :n] = jac.T
        for i in range(m):
            mat[n + i, n + i] = -d[i]
        rhs = np.empty(n + m)
        rhs[:n] = -r_f
        for i in range(m):
            rhs[n + i] = ops.add(-gv[i], lam_inv_t[i])
    elif cfg.formulation == "condensed":
        mat = hess.copy()
        for i in range(m):
            w = [ops.mul(jac[a, i], d_inv[i]) for a in range(n)]
            for a in range(n):
                for b in range(n):
                    mat[a, b] = ops.add(mat[a, b], ops.mul(w[a], jac[b, i]))
        u = np.array(
            [ops.mul(d_inv[i], ops.sub(gv[i], lam_inv_t[i])) for i in range(m)]
        )
        rhs = np.empty(n)
        for a in range(n):
            acc = -float(r_f[a])
            for i in range(m):
                acc = ops.sub(acc, ops.mul(jac[a, i], u[i]))
            rhs[a] = acc
    else:  # full
        dim = n + 2 * m
        mat = np.zeros((dim, dim))
        mat[:n, :n] = hess
        mat[:n, n : n + m] = jac
        mat[n : n + m, :n] = jac.T
        mat[n : n + m, n + m :] = np.eye(m)
        for i in range(m):
            mat[n + m + i, n + i] = s[i]
            mat[n + m + i, n + m + i] = lam[i]
        rhs = np.empty(dim)
        rhs[:n] = -r_f
        for i in range(m):
            rhs[n + i] = -ops.add(gv[i], s[i])
            rhs[n + m + i] = -ops.add(ops.mul(s[i], lam[i]), t[i])

    return AssembledSystem(
        formulation=cfg.formulation,
        matrix=mat,
        rhs=rhs,
        mu=mu,
        t=t,
        d=d,
        d_inv=d_inv,
        lam_inv_t=lam_inv_t,
        g=gv,
        jac=jac,
        hess_lag=hess,
        partition=partition,
    )


def _jac_t_dz(sys: AssembledSystem, dz: np.ndarray, ops: FloatOps) -> np.ndarray:
    m = sys.jac.shape[1]
    out = np.empty(m)
    for i in range(m):
        acc = 0.0
        for a in range(sys.jac.shape[0]):
            acc = ops.add(acc, ops.mul(sys.jac[a, i], dz[a]))
        out[i] = acc
    return out


def _recover_ds(
    sys: AssembledSystem, it: Iterate, jtdz: np.ndarray, ops: FloatOps
) -> np.ndarray:
    m = sys.g.shape[0]
    ds = np.empty(m)
    for i in range(m):
        ds[i] = ops.sub(-ops.add(sys.g[i], it.s[i]), jtdz[i])
    return ds


def _solve_symmetric(
    sys: AssembledSystem, solver: str, pcfg: PrecisionConfig
) -> Tuple[np.ndarray, List[PivotRecord], List[int]]:
    try:
        if solver == "cholesky":
            fact = linalg.cholesky(sys.matrix, pcfg)
            if isinstance(fact, CompletionFailure):
                raise StepFailure(
                    f"factorization stopped at pivot {fact.pivot_index} "
                    f"(value {fact.pivot_value:.3e})",
                    sys.mu,
                )
            return linalg.cholesky_solve(fact, sys.rhs, pcfg), [], []
        if solver in ("bunch-kaufman", "bunch-parlett"):
            factor = (
                linalg.bunch_kaufman if solver == "bunch-kaufman" else linalg.bunch_parlett
            )
            fact = factor(sys.matrix, pcfg, mu=sys.mu)
            return linalg.solve_ldlt(fact, sys.rhs, pcfg), fact.pivot_log, []
        if solver == "gepp":
            fact = linalg.gepp_factor(sys.matrix, pcfg)
            return linalg.gepp_apply(fact, sys.rhs, pcfg), [], fact.pivot_rows
    except (SingularPivot, SingularMatrix, NonFiniteError) as exc:
        raise StepFailure(str(exc), sys.mu) from exc
    raise ValueError(f"unknown solver {solver!r}")


def procedure_condensed(
    problem: NlpProblem,
    it: Iterate,
    cfg: StepConfig,
    pcfg: PrecisionConfig = NATIVE,
    known: Optional[KnownSolution] = None,
) -> StepResult:
    """Solve the primal-only system for dz, then recover dlambda and ds.

    The multiplier recovery multiplies by the elementwise ratios
    lambda_i / s_i; the slack recovery reuses the same Jacobian-transpose
    product.  Breakdown of the factorization surfaces as
    :class:`StepFailure` since it signals mu has reached the precision
    floor for this formulation.
    """
    cfg = replace(cfg, formulation="condensed")
    sys_ = assemble(problem, it, cfg, pcfg, known)
    ops = FloatOps(pcfg)
    dz, pivot_log, row_pivots = _solve_symmetric(sys_, cfg.effective_solver, pcfg)
    jtdz = _jac_t_dz(sys_, dz, ops)
    m = problem.m
    dlam = np.empty(m)
    for i in range(m):
        inner = ops.add(ops.sub(sys_.g[i], sys_.lam_inv_t[i]), jtdz[i])
        dlam[i] = ops.mul(sys_.d_inv[i], inner)
    ds = _recover_ds(sys_, it, jtdz, ops)
    try:
        step = Step(dz=dz, dlambda=dlam, ds=ds)
    except ValueError as exc:
        raise StepFailure(str(exc), sys_.mu) from exc
    return StepResult(step=step, system=sys_, pivot_log=pivot_log, row_pivots=row_pivots)


def procedure_augmented(
    problem: NlpProblem,
    it: Iterate,
    cfg: StepConfig,
    pcfg: PrecisionConfig = NATIVE,
    known: Optional[KnownSolution] = None,
) -> StepResult:
    """Solve the symmetric indefinite system for (dz, dlambda) in one shot,
    then recover ds."""
    cfg = replace(cfg, formulation="augmented")
    sys_ = assemble(problem, it, cfg, pcfg, known)
    ops = FloatOps(pcfg)
    x, pivot_log, row_pivots = _solve_symmetric(sys_, cfg.effective_solver, pcfg)
    n = problem.n
    dz, dlam = x[:n], x[n:]
    jtdz = _jac_t_dz(sys_, dz, ops)
    ds = _recover_ds(sys_, it, jtdz, ops)
    try:
        step = Step(dz=dz, dlambda=dlam, ds=ds)
    except ValueError as exc:
        raise StepFailure(str(exc), sys_.mu) from exc
    return StepResult(step=step, system=sys_, pivot_log=pivot_log, row_pivots=row_pivots)


def procedure_full(
    problem: NlpProblem,
    it: Iterate,
    cfg: StepConfig,
    pcfg: PrecisionConfig = NATIVE,
    known: Optional[KnownSolution] = None,
) -> StepResult:
    """Solve the unreduced block system for all three step components."""
    cfg = replace(cfg, formulation="full", solver="gepp")
    sys_ = assemble(problem, it, cfg, pcfg, known)
    x, pivot_log, row_pivots = _solve_symmetric(sys_, "gepp", pcfg)
    n, m = problem.n, problem.m
    try:
        step = Step(dz=x[:n], dlambda=x[n : n + m], ds=x[n + m :])
    except ValueError as exc:
        raise StepFailure(str(exc), sys_.mu) from exc
    return StepResult(step=step, system=sys_, pivot_log=pivot_log, row_pivots=row_pivots)


PROCEDURES = {
    "condensed": procedure_condensed,
    "augmented": procedure_augmented,
    "full": procedure_full,
}


def generate_step(
    problem: NlpProblem,
    it: Iterate,
    cfg: StepConfig,
    pcfg: PrecisionConfig = NATIVE,
    known: Optional[KnownSolution] = None,
) -> StepResult:
    return PROCEDURES[cfg.formulation](problem, it, cfg, pcfg, known)
