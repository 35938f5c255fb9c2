"""Command-line experiment harness.

Ties problem selection, solver configuration, optional sweeps, and table
emission together.  No configuration files: every run is fully described
by its flags, so provenance lives in the shell history.

Exit codes: 0 success, 2 usage error, 3 solver breakdown (partial trace
still written), 4 output I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Optional, Tuple

from . import diagnostics
from .driver import CentralityParams, IterationTrace, StopRule, default_mu_min, run
from .precision import MAX_MANTISSA_BITS, MIN_MANTISSA_BITS, PrecisionConfig
from .problems import PROBLEMS, standard_start
from .stepgen import FORMULATIONS, SOLVERS, StepConfig

OUTPUT_FORMATS = ("md", "csv", "json")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SOLVER_FAILURE = 3
EXIT_IO = 4


@dataclass(frozen=True)
class RunSpec:
    """Fully-defaulted description of one experiment (or a sweep)."""

    problem: str = "two-circles"
    formulation: str = "condensed"
    solver: Optional[str] = None
    t_rule: str = "mu-squared"
    sigma: float = 0.0
    mantissa_bits: int = MAX_MANTISSA_BITS
    step_fraction: float = 0.99
    max_iters: int = 12
    mu_stop: Optional[float] = None
    centrality: Tuple[float, float, float] = (10.0, 0.1, 0.25)
    output: str = "md"
    emit_table: Optional[str] = None
    trace_path: Optional[str] = None
    sweep_solver: Tuple[str, ...] = ()
    sweep_bits: Tuple[int, ...] = ()


def _bits(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if not MIN_MANTISSA_BITS <= value <= MAX_MANTISSA_BITS:
        raise argparse.ArgumentTypeError(
            f"mantissa bits must lie in [{MIN_MANTISSA_BITS}, {MAX_MANTISSA_BITS}]: {text}"
        )
    return value


def _centrality(text: str) -> Tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected C,gamma,tau")
    try:
        c, gamma, tau = (float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"non-numeric centrality triple: {text!r}")
    return (c, gamma, tau)


def _csv_list(valid, what):
    def parse(text: str):
        items = tuple(t.strip() for t in text.split(",") if t.strip())
        for item in items:
            if item not in valid:
                raise argparse.ArgumentTypeError(f"unknown {what}: {item!r}")
        return items

    return parse


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ipround",
        description="Run the interior-point stepper and emit its iteration tables.",
    )
    parser.add_argument("command", nargs="?", default="run", choices=["run"])
    parser.add_argument("--problem", default="two-circles", choices=sorted(PROBLEMS))
    parser.add_argument("--formulation", default="condensed", choices=FORMULATIONS)
    parser.add_argument(
        "--solver",
        default=None,
        choices=SOLVERS,
        help="defaults to the formulation's natural solver",
    )
    parser.add_argument("--t-rule", default="mu-squared", choices=("mu-squared", "centering"))
    parser.add_argument("--sigma", type=float, default=0.0, help="centering weight in [0,1]")
    parser.add_argument(
        "--mantissa-bits",
        type=_bits,
        default=MAX_MANTISSA_BITS,
        help="significand width; 53 means native doubles",
    )
    parser.add_argument("--step-fraction", type=float, default=0.99)
    parser.add_argument("--max-iters", type=int, default=12)
    parser.add_argument(
        "--mu-stop",
        type=float,
        default=None,
        help="stop once mu falls this low (default scales with precision)",
    )
    parser.add_argument(
        "--centrality",
        type=_centrality,
        default=(10.0, 0.1, 0.25),
        metavar="C,GAMMA,TAU",
    )
    parser.add_argument("--output", default="md", choices=OUTPUT_FORMATS)
    parser.add_argument(
        "--emit-table",
        default=None,
        metavar="PATH",
        help="write the table here (a directory when sweeping)",
    )
    parser.add_argument(
        "--trace",
        default=None,
        metavar="PATH",
        dest="trace_path",
        help="write the full JSON trace here (a directory when sweeping)",
    )
    parser.add_argument(
        "--sweep-solver",
        type=_csv_list(SOLVERS, "solver"),
        default=(),
        metavar="S1,S2,...",
    )
    parser.add_argument(
        "--sweep-bits",
        type=_csv_list_bits,
        default=(),
        metavar="P1,P2,...",
    )
    return parser


def _csv_list_bits(text: str) -> Tuple[int, ...]:
    return tuple(_bits(t.strip()) for t in text.split(",") if t.strip())


def parse_args(argv: List[str]) -> RunSpec:
    """Parse flags into a validated RunSpec; exits with status 2 on usage
    errors (argparse behavior)."""
    ns = build_parser().parse_args(argv)
    if not 0.0 <= ns.sigma <= 1.0:
        build_parser().error(f"--sigma must lie in [0, 1]: {ns.sigma}")
    if not 0.0 <= ns.step_fraction <= 1.0:
        build_parser().error(f"--step-fraction must lie in [0, 1]: {ns.step_fraction}")
    if ns.max_iters < 1:
        build_parser().error(f"--max-iters must be positive: {ns.max_iters}")
    c, gamma, tau = ns.centrality
    try:
        CentralityParams(c=c, gamma=gamma, tau=tau)
    except ValueError as exc:
        build_parser().error(f"--centrality: {exc}")
    try:
        StepConfig(
            formulation=ns.formulation,
            solver=ns.solver,
            t_rule=ns.t_rule,
            sigma=ns.sigma,
        )
    except ValueError as exc:
        build_parser().error(str(exc))
    return RunSpec(
        problem=ns.problem,
        formulation=ns.formulation,
        solver=ns.solver,
        t_rule=ns.t_rule,
        sigma=ns.sigma,
        mantissa_bits=ns.mantissa_bits,
        step_fraction=ns.step_fraction,
        max_iters=ns.max_iters,
        mu_stop=ns.mu_stop,
        centrality=ns.centrality,
        output=ns.output,
        emit_table=ns.emit_table,
        trace_path=ns.trace_path,
        sweep_solver=ns.sweep_solver,
        sweep_bits=ns.sweep_bits,
    )


def _expand_sweep(spec: RunSpec) -> List[RunSpec]:
    solvers = spec.sweep_solver or (spec.solver,)
    bits = spec.sweep_bits or (spec.mantissa_bits,)
    runs = []
    for s in solvers:
        for b in bits:
            runs.append(replace(spec, solver=s, mantissa_bits=b, sweep_solver=(), sweep_bits=()))
    return runs


def _artifact_name(spec: RunSpec, ext: str) -> str:
    cfg = StepConfig(formulation=spec.formulation, solver=spec.solver)
    return f"{spec.problem}_{spec.formulation}_{cfg.effective_solver}_p{spec.mantissa_bits}.{ext}"


def trace_document(trace: IterationTrace) -> dict:
    """JSON-serializable dump of a trace (schema documented in README)."""
    records = []
    for rec in trace.records:
        proj = rec.projection
        records.append(
            {
                "iter": rec.index,
                "z": list(rec.iterate.z),
                "lambda": list(rec.iterate.lam),
                "s": list(rec.iterate.s),
                "mu": rec.residuals.mu,
                "r_f": list(rec.residuals.r_f),
                "r_g": list(rec.residuals.r_g),
                "dz": list(rec.step.dz),
                "dlambda": list(rec.step.dlambda),
                "ds": list(rec.step.ds),
                "alpha_max": rec.alpha_max,
                "alpha_taken": rec.alpha_taken,
                "u_component": proj.u_component if proj else None,
                "v_component": proj.v_component if proj else None,
                "pivots": [
                    {
                        "kind": p.kind.value,
                        "indices": list(p.indices),
                        "magnitude_class": list(p.magnitude_class),
                    }
                    for p in rec.pivot_log
                ],
                "row_pivots": list(rec.row_pivots),
                "centrality": {
                    "rf_ratio": rec.centrality.rf_ratio,
                    "rg_ratio": rec.centrality.rg_ratio,
                    "min_pairwise_ratio": rec.centrality.min_pairwise_ratio,
                    "holds": rec.centrality.all_hold,
                    "holds_relaxed": rec.centrality_relaxed.all_hold,
                },
            }
        )
    return {
        "problem": trace.problem,
        "formulation": trace.formulation,
        "solver": trace.solver,
        "mantissa_bits": trace.mantissa_bits,
        "step_fraction": trace.step_fraction,
        "termination": trace.termination,
        "records": records,
    }


def _run_one(spec: RunSpec, sweeping: bool) -> int:
    problem, known = PROBLEMS[spec.problem]()
    pcfg = PrecisionConfig.from_bits(spec.mantissa_bits)
    cfg = StepConfig(
        formulation=spec.formulation,
        solver=spec.solver,
        t_rule=spec.t_rule,
        sigma=spec.sigma,
    )
    c, gamma, tau = spec.centrality
    stop = StopRule(
        mu_min=spec.mu_stop if spec.mu_stop is not None else default_mu_min(pcfg),
        max_iters=spec.max_iters,
        step_fraction=spec.step_fraction,
    )
    trace = run(
        problem,
        known,
        standard_start(spec.problem),
        cfg,
        CentralityParams(c=c, gamma=gamma, tau=tau),
        pcfg,
        stop,
    )
    table = diagnostics.emit_table(trace, known, fmt=spec.output)
    try:
        if spec.emit_table is not None:
            target = Path(spec.emit_table)
            if sweeping:
                target.mkdir(parents=True, exist_ok=True)
                target = target / _artifact_name(spec, spec.output)
            target.write_text(table)
        else:
            sys.stdout.write(table)
        if spec.trace_path is not None:
            target = Path(spec.trace_path)
            if sweeping:
                target.mkdir(parents=True, exist_ok=True)
                target = target / _artifact_name(spec, "trace.json")
            target.write_text(json.dumps(trace_document(trace), indent=2) + "\n")
    except OSError as exc:
        print(f"ipround: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    if trace.termination.startswith("precision floor"):
        print(f"ipround: solver stopped early: {trace.termination}", file=sys.stderr)
        return EXIT_SOLVER_FAILURE
    return EXIT_OK


def execute(spec: RunSpec) -> int:
    """Run the experiment(s) described by ``spec``; worst exit code wins."""
    runs = _expand_sweep(spec)
    sweeping = len(runs) > 1
    status = EXIT_OK
    for one in runs:
        code = _run_one(one, sweeping)
        if code == EXIT_IO:
            return EXIT_IO
        status = max(status, code)
    return status


def main(argv: Optional[List[str]] = None) -> int:
    spec = parse_args(sys.argv[1:] if argv is None else argv)
    return execute(spec)


if __name__ == "__main__":
    sys.exit(main())
