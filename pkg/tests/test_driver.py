import math

import numpy as np
import pytest

from ipround import PROBLEMS, Iterate, eval_residuals, standard_start
from ipround.driver import (
    CentralityParams,
    StopRule,
    check_centrality,
    default_mu_min,
    max_step,
    run,
)
from ipround.precision import PrecisionConfig, NATIVE
from ipround.stepgen import Step, StepConfig

U53 = 2.0**-53


# ---------------------------------------------------------------------------
# Step-length bound


def test_max_step_hits_multiplier_boundary():
    it = Iterate(z=[0.0], lam=[1.0], s=[1.0])
    step = Step(dz=np.zeros(1), dlambda=np.array([-2.0]), ds=np.array([1.0]))
    assert max_step(it, step) == 0.5


def test_max_step_caps_at_one():
    it = Iterate(z=[0.0], lam=[1.0], s=[1.0])
    step = Step(dz=np.zeros(1), dlambda=np.array([3.0]), ds=np.array([0.0]))
    assert max_step(it, step) == 1.0


def test_max_step_considers_slacks_too():
    it = Iterate(z=[0.0, 0.0], lam=[1.0, 1.0], s=[0.5, 2.0])
    step = Step(
        dz=np.zeros(2), dlambda=np.array([-0.5, -0.1]), ds=np.array([-1.0, -4.0])
    )
    assert max_step(it, step) == 0.5


def test_reference_start_step_length(trace_augmented):
    assert abs(trace_augmented.records[0].alpha_max - 0.9227) <= 0.005


# ---------------------------------------------------------------------------
# Centrality conditions


def test_centrality_ratios_at_reference_start(two_circles):
    """Ratios pinned by exact fractions: r_f = (11/75, 4/15) and
    r_g = (739, 3799)/8100 at mu = 1/10."""
    problem, _ = two_circles
    start = standard_start("two-circles")
    res = eval_residuals(problem, start)
    status = check_centrality(res, start, CentralityParams(c=2.0, gamma=0.4))
    assert status.rf_ratio == pytest.approx(math.sqrt(521.0) / 7.5, rel=1e-12)
    assert status.rg_ratio == pytest.approx(math.sqrt(14978522.0) / 810.0, rel=1e-12)
    assert status.min_pairwise_ratio == pytest.approx(1.0, rel=1e-12)
    # residual ratios exceed C = 2; only the pairwise condition holds there
    assert not status.rf_ok and not status.rg_ok and status.pairwise_ok
    # the default loose constants do accept the reference starting point
    default = check_centrality(res, start, CentralityParams())
    assert default.all_hold


def test_perfectly_centered_point_satisfies_pairwise_for_any_gamma(scalar_quadratic):
    problem, _ = scalar_quadratic
    it = Iterate(z=[1e-3], lam=[1e-3], s=[1e-3])
    res = eval_residuals(problem, it)
    for gamma in (0.1, 0.5, 0.99):
        status = check_centrality(res, it, CentralityParams(c=1.0, gamma=gamma))
        assert status.pairwise_ok
    # exact residuals vanish at this point, so any C works
    tight = check_centrality(res, it, CentralityParams(c=1e-12, gamma=0.5))
    assert tight.rf_ok and tight.rg_ok


def test_relaxed_mode_widens_both_bounds(two_circles):
    problem, _ = two_circles
    start = standard_start("two-circles")
    res = eval_residuals(problem, start)
    params = CentralityParams(c=4.5, gamma=0.9, tau=0.25)
    strict = check_centrality(res, start, params, relaxed=False)
    relaxed = check_centrality(res, start, params, relaxed=True)
    assert relaxed.c_bound == pytest.approx(params.c * 1.25)
    assert relaxed.gamma_bound == pytest.approx(params.gamma * 0.75)
    # the feasibility ratio 4.78 fails C = 4.5 but passes C (1 + tau)
    assert not strict.rg_ok and relaxed.rg_ok


def test_centrality_params_validation():
    with pytest.raises(ValueError):
        CentralityParams(c=0.0)
    with pytest.raises(ValueError):
        CentralityParams(gamma=1.0)
    with pytest.raises(ValueError):
        CentralityParams(tau=0.6)


# ---------------------------------------------------------------------------
# Full runs


def test_reference_run_mu_path(trace_augmented):
    mus = trace_augmented.mus
    assert round(math.log10(mus[0]), 1) == -1.0
    assert round(math.log10(mus[1]), 1) == -2.7
    assert math.log10(mus[8]) <= -15.0


def test_condensed_run_reaches_the_floor(trace_condensed):
    assert abs(math.log10(trace_condensed.records[9].residuals.mu) - (-17.4)) <= 0.5


def test_mu_strictly_decreases(trace_augmented, trace_condensed, trace_modified):
    for trace in (trace_augmented, trace_condensed, trace_modified):
        mus = trace.mus
        assert np.all(mus[1:] < mus[:-1])


def test_interiority_preserved(trace_augmented, trace_condensed, trace_modified, trace_augmented_p24):
    for trace in (trace_augmented, trace_condensed, trace_modified, trace_augmented_p24):
        for rec in trace.records:
            assert np.all(rec.iterate.lam > 0.0)
            assert np.all(rec.iterate.s > 0.0)


def test_zero_step_fraction_freezes_the_iterates(two_circles):
    problem, known = two_circles
    start = standard_start("two-circles")
    trace = run(
        problem,
        known,
        start,
        StepConfig(),
        CentralityParams(),
        NATIVE,
        StopRule(mu_min=1e-18, max_iters=4, step_fraction=0.0),
    )
    assert trace.termination == "max_iters"
    assert len(trace.records) == 4
    mus = trace.mus
    assert np.all(mus == mus[0])
    for rec in trace.records:
        np.testing.assert_array_equal(rec.iterate.z, start.z)


def test_quadratic_phase_drops(trace_augmented, trace_condensed):
    """Once the transient is over (the stretch the reference tables show
    as rows 5-8), each damped step cuts mu by the expected two decades."""
    for trace in (trace_augmented, trace_condensed):
        mus = trace.mus
        for k in (5, 6):
            assert 1e-12 <= mus[k] <= 1e-6
            drop = math.log10(mus[k] / mus[k + 1])
            assert abs(drop - 2.0) <= 0.3


def test_residual_reduction_law(trace_augmented, trace_condensed):
    """r_f contracts by the damping factor up to a quadratic remainder and
    roundoff; the constant is wide because the remainder scales with the
    squared step, which runs near 10^2.7 times mu on these problems."""
    K = 1e5
    for trace in (trace_augmented, trace_condensed):
        for a, b in zip(trace.records, trace.records[1:]):
            lhs = np.linalg.norm(b.residuals.r_f)
            bound = (1.0 - a.alpha_taken) * np.linalg.norm(a.residuals.r_f) + K * (
                U53 + a.residuals.mu**2
            )
            assert lhs <= bound


def test_late_stage_damping(trace_augmented):
    """As mu sinks toward roundoff, the computed direction starts clipping
    the positivity boundary: the step-length bound drops below one from
    the first iteration with mu <= 1e-13 onward (reference run shows
    .9999 there)."""
    first = next(r for r in trace_augmented.records if r.residuals.mu <= 1e-13)
    assert first.alpha_max <= 0.9999


def test_reduced_precision_run_stops_at_its_floor(trace_augmented_p24):
    assert trace_augmented_p24.termination.startswith("precision floor")
    assert 0 < len(trace_augmented_p24.records) < 10
    # mu at the breakdown is tiny relative to the 24-bit roundoff window
    last_mu = trace_augmented_p24.records[-1].residuals.mu
    assert last_mu <= 1e4 * 2.0**-24


def test_mu_stop_checked_after_stepping(two_circles):
    problem, known = two_circles
    trace = run(
        problem,
        known,
        standard_start("two-circles"),
        StepConfig(),
        CentralityParams(),
        NATIVE,
        StopRule(mu_min=1.0, max_iters=6),
    )
    assert len(trace.records) == 1
    assert trace.termination == "mu_min"


def test_default_mu_min_scales_with_precision():
    assert default_mu_min(NATIVE) == pytest.approx(1e4 * 2.0**-53)
    assert default_mu_min(PrecisionConfig.emulated(24)) == pytest.approx(1e4 * 2.0**-24)
    assert default_mu_min(PrecisionConfig.emulated(53)) == pytest.approx(1e4 * 2.0**-53)


def test_trace_records_solver_metadata(trace_augmented, trace_condensed):
    assert trace_augmented.solver == "gepp"
    assert all(r.row_pivots for r in trace_augmented.records)
    assert trace_condensed.solver == "cholesky"
    assert trace_condensed.formulation == "condensed"
    for rec in trace_condensed.records:
        assert rec.centrality.relaxed is False
        assert rec.centrality_relaxed.relaxed is True
