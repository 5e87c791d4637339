"""Instance-dependent policy evaluation for tabular Markov reward processes."""

from .complexity import (
    AsymptoticRisk,
    ComplexityProfile,
    HardAlternative,
    asymptotic_covariance,
    chi_square_divergence,
    complexity_profile,
    construct_hard_alternative,
    gaussian_linf_expectation,
    lower_bound_value,
    sample_threshold_n0,
    sigma_diag,
)
from .mrp import (
    FamilyParams,
    Mrp,
    MrpError,
    bellman_apply,
    load_mrp,
    sample_size_rule,
    save_mrp,
    solve_value_function,
    span_seminorm,
    two_state_family,
    validate,
)
from .sampling import RandomSource, draw_rewards, draw_transition, empirical_operator, stream_id
from .td import StepsizeSchedule, TdTrajectory, run_td, stepsize_at, td_step
from .vrpe import (
    VrpeConfig,
    check_epoch_length,
    monte_carlo_recenter,
    run_epoch,
    run_vrpe,
    vrpe_parameters,
    vrpe_update,
)

__version__ = "0.1.0"
