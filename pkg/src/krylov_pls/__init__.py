"""Partial least squares through its Krylov-subspace representation.

The package provides: the classical iterative PLS and its closed-form
Krylov equivalent, a ridge-regularized variant with the theoretically
calibrated penalty schedule, an oracle pseudo-estimator, evaluators for
the non-asymptotic prediction-risk bounds (with every explicit constant),
and a reproducible Monte Carlo harness for the simulation scenarios.
"""

from .bounds import (
    AssumptionReport,
    AssumptionViolationError,
    BoundConstants,
    BoundReport,
    DeviationEnvelope,
    bound_constants,
    bound_th1,
    bound_th2,
    check_assumptions,
    deviation_envelope,
    event_holds,
    quadform_tail_bound,
    ridge_spectral_check,
)
from .data import (
    Dataset,
    GramSummary,
    ModelSpec,
    gen_design,
    gen_noise,
    gen_response,
    gram_summary,
    population_sigma,
    read_csv,
    write_csv,
)
from .estimators import (
    PlsFit,
    RidgeSchedule,
    SingularKrylovError,
    estimate_tau2_ols,
    fit_oracle,
    fit_pls_krylov,
    fit_pls_ridge,
    prediction_risk,
    ridge_schedule,
)
from .krylov import (
    EmpiricalKrylov,
    PopulationDegenerateError,
    PopulationKrylov,
    RhatDiagnostic,
    build_empirical_krylov,
    build_population_krylov,
    rhat_diagnostic,
)
from .linalg import (
    NotPositiveDefiniteError,
    NumericalFailureError,
    SingularSystemError,
    SpectralSummary,
    SymMatrix,
    eig_sym,
    project_onto_colspace,
    solve_spd,
    trace_power,
)
from .pls_iter import EmptyModelError, IterativePlsState, fit_pls_iterative
from .simulate import (
    CoverageReport,
    MseCurve,
    ScenarioSpec,
    BetaRule,
    bias_variance_curve,
    coverage_experiment,
    run_scenario,
    scenario,
    write_curve_csv,
)

__version__ = "0.1.0"
