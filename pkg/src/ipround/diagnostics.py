"""Measurement apparatus: distances to the solution set, subspace error
decomposition, scaling audits, condition probes, and table rendering.

Everything here runs in native double precision regardless of the
precision the solve itself used; the instruments must not inherit the
error they are measuring.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import linalg
from .linalg import CompletionFailure
from .problems import Iterate, KnownSolution, NlpProblem
from .stepgen import AssembledSystem, Step


@dataclass(frozen=True)
class DistanceReport:
    """Exact and estimated distance to the primal-dual solution set."""

    delta_exact: float
    delta_estimate: float

    @property
    def ratio(self) -> float:
        return self.delta_estimate / self.delta_exact


@dataclass(frozen=True)
class ProjectionReport:
    """Norms of one step split along the solution-set geometry.

    ``v_component`` is the part of the active-multiplier step lying in the
    null space of the active Jacobian, the direction where computed steps
    go bad first; ``u_component`` is the complementary part.
    """

    u_component: float
    v_component: float
    dz_norm: float
    ds_norm: float
    dlambda_n_norm: float


def delta_estimate(problem: NlpProblem, it: Iterate) -> float:
    """Distance estimator from quantities available at the iterate: the
    norm of the stationarity residual stacked with min(lambda_i, -g_i)."""
    if np.any(it.lam < 0.0):
        raise ValueError("estimator requires lambda >= 0")
    r_f = problem.eval_grad_phi(it.z) + problem.eval_jac_g(it.z) @ it.lam
    g = problem.eval_g(it.z)
    comp = np.minimum(it.lam, -g)
    return float(np.linalg.norm(np.concatenate([r_f, comp])))


def _segment_distance(point: np.ndarray, a: np.ndarray, b: float) -> float:
    """Distance from ``point`` to {x >= 0 : a . x = b} by exhaustive face
    enumeration; exact up to roundoff for the small dimensions used here."""
    k = point.size
    best = math.inf
    for mask in itertools.product((False, True), repeat=k):
        free = np.array([not f for f in mask])
        fixed_norm2 = float(point[~free] @ point[~free]) if (~free).any() else 0.0
        a_free = a[free]
        p_free = point[free]
        denom = float(a_free @ a_free)
        if denom == 0.0:
            if b != 0.0:
                continue  # face is empty
            proj = p_free
        else:
            shift = (float(a_free @ p_free) - b) / denom
            proj = p_free - shift * a_free
        if proj.size and np.any(proj < 0.0):
            continue
        dist2 = fixed_norm2 + float((proj - p_free) @ (proj - p_free))
        best = min(best, dist2)
    if not math.isfinite(best):
        raise ValueError("multiplier segment is empty")
    return math.sqrt(best)


def delta_exact(known: KnownSolution, it: Iterate) -> float:
    """True distance from (z, lambda) to the known solution set: primal
    offset plus the distance of the active multipliers to their optimal
    segment plus the full size of the inactive multipliers."""
    z_off = it.z - known.z_star
    lam_b = it.lam[list(known.active_set)]
    lam_n = it.lam[list(known.inactive_set)]
    a, b = known.multiplier_affine
    seg = _segment_distance(lam_b, a, b)
    return math.sqrt(float(z_off @ z_off) + seg * seg + float(lam_n @ lam_n))


def distance_report(problem: NlpProblem, known: KnownSolution, it: Iterate) -> DistanceReport:
    return DistanceReport(
        delta_exact=delta_exact(known, it),
        delta_estimate=delta_estimate(problem, it),
    )


def project_multiplier_step(step: Step, known: KnownSolution) -> ProjectionReport:
    """Split the active-multiplier step along the range/null bases of the
    active Jacobian and record the companion norms."""
    lam_b = step.dlambda[list(known.active_set)]
    lam_n = step.dlambda[list(known.inactive_set)]
    u = known.svd.u
    v = known.svd.v
    u_comp = float(np.linalg.norm(u.T @ lam_b)) if u.size else 0.0
    v_comp = float(np.linalg.norm(v.T @ lam_b)) if v.size else 0.0
    return ProjectionReport(
        u_component=u_comp,
        v_component=v_comp,
        dz_norm=float(np.linalg.norm(step.dz)),
        ds_norm=float(np.linalg.norm(step.ds)),
        dlambda_n_norm=float(np.linalg.norm(lam_n)),
    )


@dataclass(frozen=True)
class FamilyRange:
    name: str
    lo: float
    hi: float

    @property
    def spread(self) -> float:
        if self.lo == 0.0:
            return math.inf if self.hi > 0.0 else 1.0
        return self.hi / self.lo


@dataclass(frozen=True)
class ThetaMuAudit:
    """Min/max over the trace window of the four scaled families that
    should stay bounded: s_B/mu, lambda_B, s_N, lambda_N/mu."""

    families: Tuple[FamilyRange, ...]
    window_iterations: Tuple[int, ...]
    spread_limit: float

    @property
    def passed(self) -> bool:
        return all(f.spread <= self.spread_limit for f in self.families)


THETA_WINDOW = (1e-12, 1e-2)
THETA_SPREAD_LIMIT = 1e3


def theta_mu_audit(trace, known: KnownSolution, spread_limit: float = THETA_SPREAD_LIMIT) -> ThetaMuAudit:
    """Check that active slacks scale like mu, active multipliers like 1,
    inactive slacks like 1, and inactive multipliers like mu across the
    window of the trace where the asymptotic regime applies.

    Refuses problems without strict complementarity: the clean two-scale
    classification does not exist there.
    """
    if not known.strictly_complementary:
        raise ValueError("scaling audit requires a strictly complementary problem")
    lo, hi = THETA_WINDOW
    b = list(known.active_set)
    n_idx = list(known.inactive_set)
    vals: Dict[str, List[float]] = {"s_B/mu": [], "lambda_B": [], "s_N": [], "lambda_N/mu": []}
    window: List[int] = []
    for rec in trace.records:
        mu = rec.residuals.mu
        if not lo <= mu <= hi:
            continue
        window.append(rec.index)
        vals["s_B/mu"].extend(float(rec.iterate.s[i]) / mu for i in b)
        vals["lambda_B"].extend(float(rec.iterate.lam[i]) for i in b)
        vals["s_N"].extend(float(rec.iterate.s[i]) for i in n_idx)
        vals["lambda_N/mu"].extend(float(rec.iterate.lam[i]) / mu for i in n_idx)
    families = tuple(
        FamilyRange(name, min(v), max(v)) if v else FamilyRange(name, 1.0, 1.0)
        for name, v in vals.items()
    )
    return ThetaMuAudit(
        families=families,
        window_iterations=tuple(window),
        spread_limit=spread_limit,
    )


@dataclass(frozen=True)
class ConditionEstimate:
    value: float
    lower_bound_only: bool = False


CONDITION_ITERATIONS = 50


def condition_probe(sys: AssembledSystem) -> ConditionEstimate:
    """Estimate the spectral condition number of a condensed matrix by
    power iteration for the top end and inverse iteration (through a
    native Cholesky solve) for the bottom.  If the inverse sweep cannot
    run, only the power-iteration lower bound is reported."""
    if sys.formulation != "condensed":
        raise ValueError("condition probe expects the condensed formulation")
    a = sys.matrix
    n = a.shape[0]
    v = np.ones(n) / math.sqrt(n)
    top = 0.0
    for _ in range(CONDITION_ITERATIONS):
        w = a @ v
        top = float(np.linalg.norm(w))
        if top == 0.0:
            return ConditionEstimate(value=math.inf, lower_bound_only=True)
        v = w / top
    fact = linalg.cholesky(a)
    if isinstance(fact, CompletionFailure):
        return ConditionEstimate(value=top, lower_bound_only=True)
    v = np.ones(n) / math.sqrt(n)
    inv_norm = 0.0
    for _ in range(CONDITION_ITERATIONS):
        w = linalg.cholesky_solve(fact, v)
        inv_norm = float(np.linalg.norm(w))
        if not math.isfinite(inv_norm) or inv_norm == 0.0:
            return ConditionEstimate(value=top, lower_bound_only=True)
        v = w / inv_norm
    return ConditionEstimate(value=top * inv_norm, lower_bound_only=False)


# ---------------------------------------------------------------------------
# Table rendering

TABLE_COLUMNS = (
    "iter",
    "log_mu",
    "log_dz",
    "log_u_dlambda",
    "log_v_dlambda",
    "alpha_max",
    "lambda",
)


def _log10(x: float) -> float:
    return math.log10(x) if x > 0.0 else -math.inf


def table_rows(trace, known: Optional[KnownSolution] = None) -> List[Dict[str, object]]:
    """Raw (unrounded) table cells for a trace, one dict per iteration.

    Traces run without a known solution carry no subspace projections; the
    corresponding cells stay empty unless ``known`` is supplied here.
    """
    rows: List[Dict[str, object]] = []
    for rec in trace.records:
        proj = rec.projection
        if proj is None and known is not None:
            proj = project_multiplier_step(rec.step, known)
        rows.append(
            {
                "iter": rec.index,
                "log_mu": _log10(rec.residuals.mu),
                "log_dz": _log10(proj.dz_norm) if proj else _log10(float(np.linalg.norm(rec.step.dz))),
                "log_u_dlambda": _log10(proj.u_component) if proj else None,
                "log_v_dlambda": _log10(proj.v_component) if proj else None,
                "alpha_max": rec.alpha_max,
                "lambda": [float(x) for x in rec.iterate.lam],
            }
        )
    return rows


def _fmt_log(x) -> str:
    if x is None:
        return ""
    if x == -math.inf:
        return "-inf"
    return f"{x:.1f}"


def _fmt_lambda(lam: List[float]) -> str:
    return "(" + ",".join(f"{x:.2f}" for x in lam) + ")"


def _display_row(row: Dict[str, object]) -> List[str]:
    return [
        str(row["iter"]),
        _fmt_log(row["log_mu"]),
        _fmt_log(row["log_dz"]),
        _fmt_log(row["log_u_dlambda"]),
        _fmt_log(row["log_v_dlambda"]),
        f"{row['alpha_max']:.4f}",
        _fmt_lambda(row["lambda"]),
    ]


def emit_table(trace, known: Optional[KnownSolution] = None, fmt: str = "md") -> str:
    """Render the per-iteration summary table.

    Markdown and CSV round the way the reference tables are printed (log
    columns to one decimal, the step-length bound to four); JSON keeps
    full-precision values so parsing it recovers every cell exactly.
    """
    rows = table_rows(trace, known)
    if fmt == "json":
        return json.dumps({"columns": list(TABLE_COLUMNS), "rows": rows}, indent=2)
    display = [_display_row(r) for r in rows]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TABLE_COLUMNS)
        writer.writerows(display)
        return buf.getvalue()
    if fmt == "md":
        lines = [
            "| " + " | ".join(TABLE_COLUMNS) + " |",
            "|" + "|".join("---" for _ in TABLE_COLUMNS) + "|",
        ]
        lines.extend("| " + " | ".join(cells) + " |" for cells in display)
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown table format {fmt!r}")
