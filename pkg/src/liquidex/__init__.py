"""Optimal liquidation in cash units: closed forms, simulation and discrete oracles."""

__version__ = "0.1.0"

from .closed_form import (  # noqa: E402
    CoefBundle,
    DriftSpec,
    ModelParams,
    beta_inf,
    characteristic_roots,
    denominator_D,
    denominator_derivative,
    expected_control_and_z,
    gamma_rate,
    integrated_gamma,
    log_denominator,
    nu_offset,
    optimal_control,
    position_factor,
)
from .errors import (  # noqa: E402
    AdmissibilityError,
    ConditioningError,
    DomainError,
    InputError,
    LiquidexError,
    NumericError,
    ParameterError,
    PoleError,
)
from .multi_asset import MultiAssetParams, gain_schedule, solve_feedback_gain  # noqa: E402
from .oracle import binomial_tree_dp, matrix_riccati, scalar_riccati  # noqa: E402
from .paths import TimeGrid, objective_mc, simulate_optimal  # noqa: E402
