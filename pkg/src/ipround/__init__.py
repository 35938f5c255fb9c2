"""Small dense primal-dual interior-point stepper instrumented for
finite-precision experiments."""

from .precision import (
    FloatOps,
    NonFiniteError,
    PrecisionConfig,
    NATIVE,
    NATIVE_OPS,
    round_to_bits,
    rounded,
)
from .problems import (
    Iterate,
    KnownSolution,
    NlpProblem,
    PROBLEMS,
    Residuals,
    SvdBasis,
    eval_residuals,
    make_scalar_quadratic,
    make_two_circles,
    make_two_circles_modified,
    standard_start,
)
from .stepgen import (
    AssembledSystem,
    Step,
    StepConfig,
    StepFailure,
    StepResult,
    assemble,
    generate_step,
    procedure_augmented,
    procedure_condensed,
    procedure_full,
)
from .driver import (
    CentralityParams,
    CentralityStatus,
    IterationRecord,
    IterationTrace,
    StopRule,
    check_centrality,
    default_mu_min,
    max_step,
    run,
)
from .diagnostics import (
    ConditionEstimate,
    DistanceReport,
    ProjectionReport,
    ThetaMuAudit,
    condition_probe,
    delta_estimate,
    delta_exact,
    distance_report,
    emit_table,
    project_multiplier_step,
    table_rows,
    theta_mu_audit,
)

__version__ = "0.1.0"
