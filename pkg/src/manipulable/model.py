"""Primitives of the linear manipulation model and its closed-form quantities.

Agents have a type (eta, gamma): a natural action and a gaming ability. Facing a
linear allocation rule y = beta * x + beta0, an agent takes the action

    x = eta + m * beta * gamma

and the designer's loss is E[(y - eta)^2]. Everything here is a pure function of
first and second moments, so nothing assumes a particular type distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import NotAFixedPointError, ValidationError

FIXED_POINT_TOL = 1e-8


def _finite(name, value):
    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class ModelParams:
    mu_eta: float = 0.0
    mu_gamma: float = 0.0
    sigma_eta: float = 1.0
    sigma_gamma: float = 1.0
    rho: float = 0.0
    m: float = 1.0

    def __post_init__(self):
        for name in ("mu_eta", "mu_gamma", "sigma_eta", "sigma_gamma", "rho", "m"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ValidationError(f"{name} must be a real number, got {value!r}")
            _finite(name, float(value))
            object.__setattr__(self, name, float(value))
        if self.sigma_eta <= 0:
            raise ValidationError(f"sigma_eta must be positive, got {self.sigma_eta}")
        if self.sigma_gamma <= 0:
            raise ValidationError(f"sigma_gamma must be positive, got {self.sigma_gamma}")
        if self.m <= 0:
            raise ValidationError(f"m must be positive, got {self.m}")
        if not -1.0 < self.rho < 1.0:
            raise ValidationError(f"rho must lie in (-1, 1), got {self.rho}")

    @property
    def k(self) -> float:
        """Susceptibility to manipulation, m * sigma_gamma / sigma_eta."""
        return self.m * self.sigma_gamma / self.sigma_eta

    @classmethod
    def from_k(cls, k: float, rho: float) -> "ModelParams":
        """Unit standard deviations, zero means and m = k.

        Slope-level results depend on the primitives only through (k, rho), so
        this is a canonical representative of the whole (k, rho) class.
        """
        return cls(sigma_eta=1.0, sigma_gamma=1.0, m=k, rho=rho)


@dataclass(frozen=True)
class Policy:
    beta: float
    beta0: float = 0.0

    def __post_init__(self):
        _finite("beta", self.beta)
        _finite("beta0", self.beta0)
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "beta0", float(self.beta0))

    def __call__(self, x):
        return self.beta * x + self.beta0


@dataclass(frozen=True)
class AgentType:
    eta: float
    gamma: float

    def __post_init__(self):
        _finite("eta", self.eta)
        _finite("gamma", self.gamma)


@dataclass(frozen=True)
class WelfareBreakdown:
    info_loss: float
    misallocation_loss: float
    total: float


def validate_k_rho(k, rho):
    if not (math.isfinite(k) and k > 0):
        raise ValidationError(f"k must be positive and finite, got {k}")
    if not -1.0 < rho < 1.0:
        raise ValidationError(f"rho must lie in (-1, 1), got {rho}")


def agent_action(params: ModelParams, policy: Policy, agent: AgentType) -> float:
    return agent.eta + params.m * policy.beta * agent.gamma


def action_moments(params: ModelParams, beta: float) -> tuple[float, float, float]:
    """Return (mean_x, var_x, cov_x_eta) when agents respond to slope ``beta``."""
    p = params
    s = p.m * p.rho * p.sigma_eta * p.sigma_gamma
    mean_x = p.mu_eta + p.m * beta * p.mu_gamma
    cov = p.sigma_eta**2 + s * beta
    var = p.sigma_eta**2 + (p.m * p.sigma_gamma * beta) ** 2 + 2 * s * beta
    return mean_x, var, cov


def best_response_beta(params: ModelParams, beta: float) -> float:
    """OLS slope of eta on x under the agents' response to ``beta``."""
    _, var, cov = action_moments(params, beta)
    return cov / var


def best_response_intercept(params: ModelParams, beta: float) -> float:
    mean_x, var, cov = action_moments(params, beta)
    return params.mu_eta - (cov / var) * mean_x


def best_response_policy(params: ModelParams, beta: float) -> Policy:
    return Policy(best_response_beta(params, beta), best_response_intercept(params, beta))


def best_response_beta_derivative(params: ModelParams, beta: float) -> float:
    p = params
    se, sg, m, rho = p.sigma_eta, p.sigma_gamma, p.m, p.rho
    _, var, _ = action_moments(params, beta)
    num = 2 * beta * m * se * sg + rho * se**2 + rho * beta**2 * m**2 * sg**2
    return -m * se * sg * num / var**2


def optimal_intercept(params: ModelParams, beta: float) -> float:
    """Loss-minimizing intercept for slope ``beta``: centers the mean allocation on mu_eta."""
    return (1 - beta) * params.mu_eta - params.m * beta**2 * params.mu_gamma


def welfare_loss(params: ModelParams, policy: Policy, response_beta: float | None = None) -> float:
    """Expected squared allocation error E[(beta*x + beta0 - eta)^2].

    By default agents respond to the policy being evaluated. Passing
    ``response_beta`` evaluates ``policy`` on actions taken in response to a
    different slope (used when a rule is scored on someone else's data).
    """
    p = params
    b, b0 = policy.beta, policy.beta0
    if response_beta is None:
        s = p.m * p.rho * p.sigma_eta * p.sigma_gamma
        bias = b0 - (1 - b) * p.mu_eta + p.m * b**2 * p.mu_gamma
        return (
            (1 - b) ** 2 * p.sigma_eta**2
            + p.m**2 * b**4 * p.sigma_gamma**2
            - 2 * (1 - b) * b**2 * s
            + bias**2
        )
    mean_x, var, cov = action_moments(params, response_beta)
    bias = b * mean_x + b0 - p.mu_eta
    return b**2 * var - 2 * b * cov + p.sigma_eta**2 + bias**2


def info_loss(params: ModelParams, beta: float) -> float:
    """Residual variance of the best linear estimate of eta from x.

    Written as m^2 se^2 sg^2 beta^2 (1 - rho^2) / Var(x) rather than
    se^2 - cov^2/var, which is the same quantity without cancellation.
    """
    p = params
    _, var, _ = action_moments(params, beta)
    return (p.m * p.sigma_eta * p.sigma_gamma * beta) ** 2 * (1 - p.rho**2) / var


def welfare_breakdown(
    params: ModelParams, policy: Policy, response_beta: float | None = None
) -> WelfareBreakdown:
    """Split the loss of ``policy`` into information and misallocation loss.

    Misallocation is the full E[(Y(x) - linear estimate)^2], so an intercept
    that does not center the allocation on mu_eta shows up there too.
    """
    beta_resp = policy.beta if response_beta is None else response_beta
    mean_x, var, cov = action_moments(params, beta_resp)
    bhat = cov / var
    info = info_loss(params, beta_resp)
    mean_gap = policy.beta * mean_x + policy.beta0 - params.mu_eta
    mis = (policy.beta - bhat) ** 2 * var + mean_gap**2
    return WelfareBreakdown(info_loss=info, misallocation_loss=max(mis, 0.0), total=info + mis)


def normalized_loss(k: float, rho: float, beta: float) -> float:
    """Loss at the best intercept for ``beta``, divided by sigma_eta^2."""
    return (k * beta**2 + beta - 1) ** 2 + 2 * (1 - rho) * beta**2 * (1 - beta) * k


def normalized_loss_derivative(k: float, rho: float, beta: float) -> float:
    return -2 * (1 - beta) + 4 * k**2 * beta**3 + 2 * rho * k * beta * (3 * beta - 2)


def normalized_loss_second_derivative(k: float, rho: float, beta: float) -> float:
    return 2 + 12 * k**2 * beta**2 + 4 * rho * k * (3 * beta - 1)


def loss_slope_at_fixed_point(params: ModelParams, beta_fp: float) -> float:
    """Slope of the loss (at optimal intercepts) at a fixed point.

    Uses the fixed-point identity, so the input must actually be one.
    """
    residual = best_response_beta(params, beta_fp) - beta_fp
    if abs(residual) >= FIXED_POINT_TOL:
        raise NotAFixedPointError(
            f"beta={beta_fp!r} is not a fixed point (|bhat(beta) - beta| = {abs(residual):.3g})"
        )
    p = params
    _, var, _ = action_moments(params, beta_fp)
    return 2 * p.m**2 / var * beta_fp**2 * p.sigma_eta**2 * p.sigma_gamma**2 * (1 - p.rho**2)
