"""Solution-region solver and certifier for discontinuous ODE systems."""

from .rhs_model import (
    EvaluationError,
    ExplicitLevels,
    LatticeLevels,
    RhsModel,
    SurfaceSpec,
    empirical_bound,
    estimate_lipschitz,
    eval_rhs,
    factored_model,
    surface_distance,
)
from .krasovskij import (
    EnvelopeSample,
    EpsSchedule,
    SupportInterval,
    envelope_samples,
    support_interval,
    support_upper,
)
from .regions import (
    CheckReport,
    PairInconsistencyError,
    PiecewiseFn,
    ViablePair,
    ball_pair,
    band_pair,
    check_ball_boundary,
    check_lambda_condition,
    check_lower_solution,
    check_solution_region,
    check_transversality,
    check_upper_solution,
    classify_pair,
    example_band45_pair,
    modified_model,
)
from .integrator import (
    Event,
    IntegrationError,
    IntegratorConfig,
    Trajectory,
    integrate_inclusion_euler,
    integrate_modified,
    reference_solution,
    write_events_file,
    write_trajectory_csv,
)
from .verify import (
    CertReport,
    certify,
    certify_region,
    certify_residual,
    surface_time,
)
from . import presets

__version__ = "0.1.0"
