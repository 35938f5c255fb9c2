"""Local-phase path-following iteration.

Repeats: generate a step from the configured formulation, measure the
largest multiple of it that keeps (lambda, s) strictly positive, move a
fixed fraction of that distance, and record everything.  No globalization,
no centering heuristics, no recovery on solver breakdown: near the
precision floor a failed factorization is itself the observation, so the
run stops and says so.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .diagnostics import ProjectionReport, project_multiplier_step
from .linalg import PivotRecord
from .precision import FloatOps, PrecisionConfig, NATIVE
from .problems import Iterate, KnownSolution, NlpProblem, Residuals, eval_residuals
from .stepgen import Step, StepConfig, StepFailure, generate_step


@dataclass(frozen=True)
class CentralityParams:
    """Constants for the path-neighborhood conditions: residual norms at
    most C mu, pairwise products at least gamma mu.  ``tau`` widens both
    bounds in relaxed mode (C grows by 1+tau, gamma shrinks by 1-tau)."""

    c: float = 10.0
    gamma: float = 0.1
    tau: float = 0.25

    def __post_init__(self):
        if self.c <= 0.0:
            raise ValueError("C must be positive")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if not 0.0 <= self.tau <= 0.5:
            raise ValueError("tau must lie in [0, 1/2]")


@dataclass(frozen=True)
class CentralityStatus:
    """Achieved ratios for the three neighborhood conditions, with the
    bounds they were compared against.  Informational only; never raises."""

    rf_ratio: float
    rg_ratio: float
    min_pairwise_ratio: float
    c_bound: float
    gamma_bound: float
    relaxed: bool

    @property
    def rf_ok(self) -> bool:
        return self.rf_ratio <= self.c_bound

    @property
    def rg_ok(self) -> bool:
        return self.rg_ratio <= self.c_bound

    @property
    def pairwise_ok(self) -> bool:
        return self.min_pairwise_ratio >= self.gamma_bound

    @property
    def all_hold(self) -> bool:
        return self.rf_ok and self.rg_ok and self.pairwise_ok


def check_centrality(
    res: Residuals,
    it: Iterate,
    params: CentralityParams,
    relaxed: bool = False,
) -> CentralityStatus:
    mu = res.mu
    c_bound = params.c * (1.0 + params.tau) if relaxed else params.c
    gamma_bound = params.gamma * (1.0 - params.tau) if relaxed else params.gamma
    pairwise = it.lam * it.s
    return CentralityStatus(
        rf_ratio=float(np.linalg.norm(res.r_f)) / mu,
        rg_ratio=float(np.linalg.norm(res.r_g)) / mu,
        min_pairwise_ratio=float(np.min(pairwise)) / mu,
        c_bound=c_bound,
        gamma_bound=gamma_bound,
        relaxed=relaxed,
    )


def max_step(it: Iterate, step: Step) -> float:
    """Largest alpha in [0, 1] with lambda + alpha dlambda >= 0 and
    s + alpha ds >= 0, at the exact boundary (no damping)."""
    alpha = 1.0
    for val, dval in zip(it.lam, step.dlambda):
        if dval < 0.0:
            alpha = min(alpha, -float(val) / float(dval))
    for val, dval in zip(it.s, step.ds):
        if dval < 0.0:
            alpha = min(alpha, -float(val) / float(dval))
    return alpha


@dataclass(frozen=True)
class StopRule:
    """Termination controls: stop once mu falls to ``mu_min``, after
    ``max_iters`` steps, or on solver failure.  Each step moves
    ``step_fraction`` of the distance to the positivity boundary."""

    mu_min: float
    max_iters: int = 12
    step_fraction: float = 0.99


def default_mu_min(pcfg: PrecisionConfig) -> float:
    """Floor below which the step systems are not worth solving: a small
    multiple of the unit roundoff, clamped away from exact zero."""
    return max(1e4 * pcfg.unit_roundoff, 1e-17)


@dataclass(frozen=True)
class IterationRecord:
    index: int
    iterate: Iterate
    residuals: Residuals
    step: Step
    alpha_max: float
    alpha_taken: float
    projection: Optional[ProjectionReport]
    pivot_log: List[PivotRecord]
    row_pivots: List[int]
    centrality: CentralityStatus
    centrality_relaxed: CentralityStatus


@dataclass
class IterationTrace:
    problem: str
    formulation: str
    solver: str
    mantissa_bits: int
    step_fraction: float
    records: List[IterationRecord] = field(default_factory=list)
    termination: str = ""

    @property
    def mus(self) -> np.ndarray:
        return np.array([r.residuals.mu for r in self.records])


def _rounded_iterate(it: Iterate, ops: FloatOps) -> Iterate:
    return Iterate(
        z=np.array([ops.c(v) for v in it.z]),
        lam=np.array([ops.c(v) for v in it.lam]),
        s=np.array([ops.c(v) for v in it.s]),
    )


def run(
    problem: NlpProblem,
    known: Optional[KnownSolution],
    start: Iterate,
    cfg: StepConfig,
    params: CentralityParams,
    pcfg: PrecisionConfig = NATIVE,
    stop: Optional[StopRule] = None,
) -> IterationTrace:
    """Run the damped iteration from ``start`` and return the full trace.

    Residuals, projections, and centrality ratios in the trace are always
    measured in native doubles; only the step pipeline and the iterate
    update run at the configured precision.  Centrality violations are
    recorded, never enforced.
    """
    if stop is None:
        stop = StopRule(mu_min=default_mu_min(pcfg))
    ops = FloatOps(pcfg)
    it = _rounded_iterate(start, ops)
    trace = IterationTrace(
        problem=problem.name,
        formulation=cfg.formulation,
        solver=cfg.effective_solver,
        mantissa_bits=pcfg.mantissa_bits,
        step_fraction=stop.step_fraction,
    )
    trace.termination = "max_iters"
    for k in range(stop.max_iters):
        res = eval_residuals(problem, it)
        try:
            result = generate_step(problem, it, cfg, pcfg, known)
        except StepFailure as exc:
            trace.termination = f"precision floor reached: {exc}"
            return trace
        step = result.step
        alpha_max = max_step(it, step)
        alpha = stop.step_fraction * alpha_max
        proj = project_multiplier_step(step, known) if known is not None else None
        trace.records.append(
            IterationRecord(
                index=k,
                iterate=it,
                residuals=res,
                step=step,
                alpha_max=alpha_max,
                alpha_taken=alpha,
                projection=proj,
                pivot_log=result.pivot_log,
                row_pivots=result.row_pivots,
                centrality=check_centrality(res, it, params, relaxed=False),
                centrality_relaxed=check_centrality(res, it, params, relaxed=True),
            )
        )
        if alpha > 0.0:
            alpha_c = ops.c(alpha)
            try:
                it = Iterate(
                    z=np.array(
                        [ops.add(z, ops.mul(alpha_c, dz)) for z, dz in zip(it.z, step.dz)]
                    ),
                    lam=np.array(
                        [
                            ops.add(l, ops.mul(alpha_c, dl))
                            for l, dl in zip(it.lam, step.dlambda)
                        ]
                    ),
                    s=np.array(
                        [ops.add(s, ops.mul(alpha_c, ds)) for s, ds in zip(it.s, step.ds)]
                    ),
                )
            except ValueError:
                # rounding at working precision landed on the positivity
                # boundary; same regime as a factorization breakdown
                trace.termination = "precision floor reached: update left the interior"
                return trace
        new_mu = eval_residuals(problem, it).mu
        if new_mu <= stop.mu_min:
            trace.termination = "mu_min"
            return trace
    return trace
