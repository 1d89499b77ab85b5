"""Benchmark policies: naive, constant, fixed points, and the commitment optimum."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import SolverError, ValidationError
from .model import (
    FIXED_POINT_TOL,
    ModelParams,
    Policy,
    best_response_beta,
    best_response_intercept,
    best_response_policy,
    loss_slope_at_fixed_point,
    normalized_loss,
    normalized_loss_derivative,
    normalized_loss_second_derivative,
    optimal_intercept,
    validate_k_rho,
    welfare_loss,
)
from .roots import cubic_real_roots

CONVERGED = "converged"
CYCLING = "cycling"
MAX_ITERATIONS = "max-iterations"
CYCLE_SEPARATION = 1e-6


@dataclass(frozen=True)
class PolicySolution:
    naive: Policy
    constant: Policy
    fixed_points: list  # [(Policy, loss)], ascending in beta
    optimal: Policy
    optimal_loss: float
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class DynamicsTrace:
    iterates: list  # [(iteration, beta)]
    status: str

    @property
    def beta(self) -> float:
        return self.iterates[-1][1]

    @property
    def iterations(self) -> int:
        return self.iterates[-1][0]


def naive_policy(params: ModelParams | None = None) -> Policy:
    """Best response to data gathered under a constant rule: slope 1, intercept 0."""
    params = params or ModelParams()
    return best_response_policy(params, 0.0)


def constant_policy(params: ModelParams) -> Policy:
    return Policy(0.0, params.mu_eta)


def fixed_point_cubic(k: float, rho: float) -> tuple[float, float, float, float]:
    """Coefficients of bhat(beta) = beta, cleared of Var(x) and divided by sigma_eta^2."""
    return k * k, 2 * rho * k, 1 - rho * k, -1.0


def fixed_points_k(k: float, rho: float) -> list[float]:
    validate_k_rho(k, rho)
    roots = cubic_real_roots(*fixed_point_cubic(k, rho))
    params = ModelParams.from_k(k, rho)
    for r in roots:
        if abs(best_response_beta(params, r) - r) >= FIXED_POINT_TOL:
            raise SolverError(f"cubic root {r!r} is not a fixed point at k={k}, rho={rho}")
    return roots


def fixed_points(params: ModelParams) -> list[float]:
    """All slopes beta with bhat(beta) = beta, ascending."""
    roots = fixed_points_k(params.k, params.rho)
    for r in roots:
        if abs(best_response_beta(params, r) - r) >= FIXED_POINT_TOL:
            raise SolverError(f"cubic root {r!r} is not a fixed point for {params}")
    return roots


def fixed_point_policies(params: ModelParams) -> list[Policy]:
    return [Policy(b, best_response_intercept(params, b)) for b in fixed_points(params)]


def optimal_beta(k: float, rho: float) -> float:
    """Smallest nonnegative root of the loss derivative; the unique minimizer."""
    validate_k_rho(k, rho)
    # L'(b) = 4k^2 b^3 + 6 rho k b^2 + (2 - 4 rho k) b - 2
    roots = cubic_real_roots(4 * k * k, 6 * rho * k, 2 - 4 * rho * k, -2.0)
    candidates = [r for r in roots if 0.0 <= r <= 2.0]
    if not candidates:
        raise SolverError(f"no root of the loss derivative in [0, 2] at k={k}, rho={rho}")
    b = candidates[0]
    if normalized_loss_second_derivative(k, rho, b) <= 0:
        raise SolverError(f"second-order condition fails at beta*={b} (k={k}, rho={rho})")
    return b


def optimal_policy(params: ModelParams) -> Policy:
    b = optimal_beta(params.k, params.rho)
    return Policy(b, optimal_intercept(params, b))


def optimal_loss(params: ModelParams) -> float:
    return params.sigma_eta**2 * normalized_loss(params.k, params.rho, optimal_beta(params.k, params.rho))


def solve_all(params: ModelParams) -> PolicySolution:
    naive = naive_policy(params)
    constant = constant_policy(params)
    fps = fixed_point_policies(params)
    opt = optimal_policy(params)
    opt_loss = params.sigma_eta**2 * normalized_loss(params.k, params.rho, opt.beta)

    bhat_star = best_response_beta(params, opt.beta)
    slopes = [loss_slope_at_fixed_point(params, p.beta) for p in fps]
    positive_fps = [p.beta for p in fps if p.beta > 0]
    diagnostics = {
        "best_response_at_optimum": bhat_star,
        "loss_slope_at_fixed_points": slopes,
        "second_derivative_at_optimum": normalized_loss_second_derivative(params.k, params.rho, opt.beta),
        "naive_loss": welfare_loss(params, naive),
        "constant_loss": welfare_loss(params, constant),
        "optimal_positive": opt.beta > 0,
        "optimal_below_positive_fixed_points": all(opt.beta < b for b in positive_fps),
        "optimal_underutilizes_data": bhat_star > opt.beta,
        "loss_slopes_positive": all(s > 0 for s in slopes),
    }
    return PolicySolution(
        naive=naive,
        constant=constant,
        fixed_points=[(p, welfare_loss(params, p)) for p in fps],
        optimal=opt,
        optimal_loss=opt_loss,
        diagnostics=diagnostics,
    )


def iterate_best_response(params, beta_start, max_iter=1000, tol=1e-12, recur_tol=1e-10) -> DynamicsTrace:
    """Re-estimate the slope on data generated under the previous slope, repeatedly."""
    if max_iter < 1:
        raise ValidationError("max_iter must be at least 1")
    if not tol > 0:
        raise ValidationError("tol must be positive")
    beta = float(beta_start)
    iterates = [(0, beta)]
    for i in range(1, max_iter + 1):
        nxt = best_response_beta(params, beta)
        if abs(nxt - beta) < tol:
            return DynamicsTrace(iterates, CONVERGED)
        beta = nxt
        # a damped oscillation also revisits old values; a cycle keeps its points apart
        if abs(beta - iterates[-1][1]) > CYCLE_SEPARATION and any(
                abs(beta - b) < recur_tol for _, b in iterates[:-1]):
            iterates.append((i, beta))
            return DynamicsTrace(iterates, CYCLING)
        iterates.append((i, beta))
    if abs(best_response_beta(params, beta) - beta) < tol:
        return DynamicsTrace(iterates, CONVERGED)
    return DynamicsTrace(iterates, MAX_ITERATIONS)


def cubic_discriminant(c3, c2, c1, c0) -> float:
    return 18 * c3 * c2 * c1 * c0 - 4 * c2**3 * c0 + c2**2 * c1**2 - 4 * c3 * c1**3 - 27 * c3**2 * c0**2


def rho_with_three_fixed_points(k: float, steps: int = 2000) -> float | None:
    """A negative correlation at which bhat crosses the diagonal three times.

    Scans rho over (-1, 0) for a positive cubic discriminant and returns the
    midpoint of the first run of qualifying grid points, or None.
    """
    run = []
    for i in range(1, steps):
        rho = -1.0 + i / steps
        if cubic_discriminant(*fixed_point_cubic(k, rho)) > 0:
            run.append(rho)
        elif run:
            break
    if not run:
        return None
    return run[len(run) // 2]
