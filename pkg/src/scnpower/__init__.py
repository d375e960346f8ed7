"""Energy-efficient power control for two-tier small cell networks.

Library + CLI: reproducible network scenarios, a per-cell EE maximizer built
on a perspective-style variable stretch with a mixed barrier/penalty method,
a best-response game loop with Nash-equilibrium diagnostics, spectral-
efficiency and brute-force baselines, and an experiment runner that writes
CSV summaries, JSON traces and figures.
"""

from .errors import (
    DegenerateScale,
    InfeasibleRate,
    MaxItersExceeded,
    NotConverged,
    OutOfDomain,
    ScnPowerError,
    SpacingInfeasible,
    SpecValidationError,
)
from .scenario import (
    NetworkScenario,
    ScenarioConfig,
    dbm_to_watts,
    generate,
    noise_power,
    path_loss,
    watts_to_dbm,
)
from .metrics import (
    EeParams,
    PowerProfile,
    ee_of_sbs,
    interference_plus_noise,
    interference_vector,
    rate,
    system_ee,
    system_se,
)
from .ee_solver import (
    EeSubproblem,
    InnerSolverConfig,
    PenaltySchedule,
    SolveDiagnostics,
    equality_violation,
    find_strictly_feasible,
    from_transformed,
    make_subproblem,
    penalized_objective,
    penalized_objective_gradient,
    solve_best_response,
    subproblem_ee,
    subproblem_rate,
    to_transformed,
    transformed_ee,
)
from .game import GameConfig, GameTrace, check_nash, run_game
from .baselines import (
    GridOracleConfig,
    grid_best_response,
    grid_search_system_ee,
    run_se_game,
    se_best_response,
)

__version__ = "0.1.0"
