"""Naive, fixed-point and commitment-optimal linear allocation rules under data manipulation."""

from .errors import (
    DegenerateRegressorError,
    NotAFixedPointError,
    SolverError,
    TargetUnreachableError,
    ValidationError,
)
from .model import (
    AgentType,
    ModelParams,
    Policy,
    WelfareBreakdown,
    action_moments,
    agent_action,
    best_response_beta,
    best_response_beta_derivative,
    best_response_intercept,
    loss_slope_at_fixed_point,
    normalized_loss,
    normalized_loss_derivative,
    welfare_breakdown,
    welfare_loss,
)
from .solvers import (
    PolicySolution,
    constant_policy,
    fixed_points,
    iterate_best_response,
    naive_policy,
    optimal_policy,
    solve_all,
)

__version__ = "0.1.0"
