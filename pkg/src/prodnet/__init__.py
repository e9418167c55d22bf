"""Dynamic production networks: Leontief step matrices, entry/exit evolution,
stationary degree laws, aggregate volatility and controllability."""

__version__ = "0.1.0"

from .control import (
    ControlReport,
    InputAssignment,
    control_report,
    controllability_matrix,
    driver_fraction_analytic,
    kalman_rank,
    maximum_matching,
)
from .economy import Economy, ShockModel, optimal_allocations, relative_prices, validate_economy
from .evolve import EvolutionConfig, Trajectory, empirical_degree_distribution, evolve, evolve_step
from .fluct import (
    EconomyTemplate,
    aggregate_volatility,
    domar_weights,
    log_outputs,
    monte_carlo_var_centrality,
)
from .leontief import StepSet, build_step_set, leontief_inverse, neumann_series, share_weight
from .netcore import (
    Graph,
    attachment_distribution,
    degree_stats,
    deletion_distribution,
    generate_basic,
)
from .stationary import (
    CALIBRATION,
    StationaryParams,
    compute_RS,
    fit_power_law,
    stationary_pmf,
    upper_incomplete_gamma,
)
