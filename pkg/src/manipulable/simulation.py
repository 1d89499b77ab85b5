"""Seeded Monte Carlo populations and empirical counterparts of the analytic formulas.

Random draws come from counter-based Philox streams. The population is cut into
fixed-size chunks and chunk ``j`` of stream ``s`` under seed ``seed`` always uses
the key (seed, s, j), so the draws do not depend on how many workers produce them.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import DegenerateRegressorError, ValidationError
from .model import ModelParams, Policy, action_moments, welfare_breakdown

CHUNK = 1 << 16
SEED_MAX = (1 << 64) - 1

STREAM_TYPES = 0
STREAM_NOISE = 1


def _check_seed(seed):
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or not 0 <= seed <= SEED_MAX:
        raise ValidationError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    return int(seed)


def chunk_generator(seed: int, stream: int, chunk: int) -> np.random.Generator:
    key = _check_seed(seed) | (stream << 96) | (chunk << 64)
    return np.random.Generator(np.random.Philox(key=key))


def standard_normal_draws(seed, n, columns, stream=STREAM_TYPES, workers=1) -> np.ndarray:
    """An (n, columns) array of independent standard normals."""
    if isinstance(workers, bool) or not isinstance(workers, (int, np.integer)) or workers < 1:
        raise ValidationError(f"workers must be a positive integer, got {workers!r}")
    out = np.empty((n, columns))
    starts = range(0, n, CHUNK)

    def fill(start):
        stop = min(start + CHUNK, n)
        gen = chunk_generator(seed, stream, start // CHUNK)
        out[start:stop] = gen.standard_normal((stop - start, columns))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, starts))
    else:
        for s in starts:
            fill(s)
    return out


def standard_normal_pairs(seed, n, workers=1):
    return standard_normal_draws(seed, n, 2, STREAM_TYPES, workers)


# Any (seed, n, workers) -> (n, 2) array of uncorrelated, zero-mean, unit-variance
# draws can stand in for the normal; a spherical family keeps the result elliptical.
StandardDraws = Callable[[int, int, int], np.ndarray]


def _readonly(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class AgentSample:
    params: ModelParams
    policy: Policy
    seed: int
    eta: np.ndarray
    gamma: np.ndarray
    x: np.ndarray

    @property
    def n(self) -> int:
        return len(self.x)

    def to_csv(self, path):
        from .formats import write_csv

        write_csv(path, ["eta", "gamma", "x"], np.column_stack([self.eta, self.gamma, self.x]))


def sample_population(
    params: ModelParams,
    policy: Policy,
    n: int,
    seed: int,
    workers: int = 1,
    draws: StandardDraws = standard_normal_pairs,
) -> AgentSample:
    """Draw n agent types with the model's moments and let them respond to ``policy``."""
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 2:
        raise ValidationError(f"n must be an integer >= 2, got {n!r}")
    seed = _check_seed(seed)
    z = draws(seed, int(n), workers)
    p = params
    eta = p.mu_eta + p.sigma_eta * z[:, 0]
    gamma = p.mu_gamma + p.sigma_gamma * (p.rho * z[:, 0] + math.sqrt(1 - p.rho**2) * z[:, 1])
    x = eta + (p.m * policy.beta) * gamma
    return AgentSample(params, policy, seed, _readonly(eta), _readonly(gamma), _readonly(x))


class Estimate(NamedTuple):
    value: float
    std_error: float


@dataclass(frozen=True)
class OlsFit:
    slope: float
    intercept: float
    residual_variance: float
    n: int
    slope_std_error: float
    intercept_std_error: float


def ols(x, y) -> OlsFit:
    """Simple regression of y on x with an intercept.

    ``residual_variance`` is the mean squared residual (divisor n); the standard
    errors use the usual n - 2 divisor.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    if n < 2:
        raise ValidationError("need at least 2 observations")
    xm, ym = x.mean(), y.mean()
    dx = x - xm
    sxx = float(dx @ dx)
    if sxx == 0.0:
        raise DegenerateRegressorError("regressor has zero sample variance")
    slope = float(dx @ (y - ym)) / sxx
    intercept = float(ym - slope * xm)
    resid = y - (slope * x + intercept)
    ssr = float(resid @ resid)
    s2 = ssr / (n - 2) if n > 2 else math.nan
    return OlsFit(
        slope=slope,
        intercept=intercept,
        residual_variance=ssr / n,
        n=n,
        slope_std_error=math.sqrt(s2 / sxx),
        intercept_std_error=math.sqrt(s2 * (1.0 / n + xm * xm / sxx)),
    )


def ols_eta_on_x(sample: AgentSample) -> OlsFit:
    return ols(sample.x, sample.eta)


def _mean_se(values):
    values = np.asarray(values)
    return Estimate(float(values.mean()), float(values.std(ddof=1) / math.sqrt(len(values))))


def empirical_welfare(sample: AgentSample, eval_policy: Policy) -> Estimate:
    """Mean and standard error of (Y(x) - eta)^2 over the sample.

    Agents in ``sample`` acted in response to ``sample.policy``; ``eval_policy``
    is only used to map their actions to allocations.
    """
    return _mean_se((eval_policy(sample.x) - sample.eta) ** 2)


def paired_welfare_difference(sample_a, policy_a, sample_b, policy_b) -> Estimate:
    """Loss of (sample_a, policy_a) minus loss of (sample_b, policy_b), drawn on common types."""
    if sample_a.n != sample_b.n or sample_a.seed != sample_b.seed:
        raise ValidationError("paired comparison needs samples with the same n and seed")
    la = (policy_a(sample_a.x) - sample_a.eta) ** 2
    lb = (policy_b(sample_b.x) - sample_b.eta) ** 2
    return _mean_se(la - lb)


@dataclass(frozen=True)
class ActionMoments:
    mean_x: Estimate
    var_x: Estimate
    cov_x_eta: Estimate


def empirical_moments(sample: AgentSample) -> ActionMoments:
    n = sample.n
    dx = sample.x - sample.x.mean()
    de = sample.eta - sample.eta.mean()
    sq = dx * dx
    cross = dx * de
    return ActionMoments(
        mean_x=Estimate(float(sample.x.mean()), float(dx.std(ddof=1) / math.sqrt(n))),
        var_x=Estimate(float(sq.sum() / (n - 1)), float(sq.std(ddof=1) / math.sqrt(n))),
        cov_x_eta=Estimate(float(cross.sum() / (n - 1)), float(cross.std(ddof=1) / math.sqrt(n))),
    )


@dataclass(frozen=True)
class DecompositionReport:
    info_loss: Estimate
    misallocation_loss: Estimate
    welfare: Estimate
    identity_gap: float  # info + misallocation - welfare
    analytic_info_loss: float
    analytic_misallocation_loss: float
    analytic_total: float

    @property
    def identity_holds(self) -> bool:
        return abs(self.identity_gap) <= 3 * self.welfare.std_error

    def z_scores(self) -> dict:
        def z(est, target):
            return (est.value - target) / est.std_error if est.std_error > 0 else (
                0.0 if est.value == target else math.inf)

        return {
            "info_loss": z(self.info_loss, self.analytic_info_loss),
            "misallocation_loss": z(self.misallocation_loss, self.analytic_misallocation_loss),
            "welfare": z(self.welfare, self.analytic_total),
        }


def decomposition_check(sample: AgentSample, eval_policy: Policy) -> DecompositionReport:
    """Empirical information/misallocation split of the loss of ``eval_policy``.

    Information loss is the OLS residual variance of eta on x; misallocation is
    the mean squared gap between ``eval_policy`` and the OLS fitted values.
    In-sample they add up to the empirical loss up to rounding.

    Misallocation equals (b - slope)^2 Var(x) + (mean gap)^2, so its standard
    error comes from the delta method on the slope, Var(x) and the mean gap.
    A second-order term is kept because near a fixed point the first-order
    part vanishes.
    """
    fit = ols_eta_on_x(sample)
    x, eta = sample.x, sample.eta
    resid = eta - (fit.slope * x + fit.intercept)
    gap = eval_policy(x) - (fit.slope * x + fit.intercept)
    info = _mean_se(resid**2)
    mis_value = float(np.mean(gap**2))
    welfare = empirical_welfare(sample, eval_policy)

    n = sample.n
    moments = empirical_moments(sample)
    var_x, var_x_se = moments.var_x
    d_slope = eval_policy.beta - fit.slope
    mean_gap = float(gap.mean())
    mean_gap_se = float(np.std(eval_policy(x) - eta, ddof=1) / math.sqrt(n))
    se_slope = fit.slope_std_error
    first = (2 * d_slope * var_x * se_slope) ** 2 + (d_slope**2 * var_x_se) ** 2 + (2 * mean_gap * mean_gap_se) ** 2
    second = 2 * (se_slope**2 * var_x) ** 2 + 2 * mean_gap_se**4
    mis = Estimate(mis_value, math.sqrt(first + second))

    analytic = welfare_breakdown(sample.params, eval_policy, response_beta=sample.policy.beta)
    return DecompositionReport(
        info_loss=info,
        misallocation_loss=mis,
        welfare=welfare,
        identity_gap=info.value + mis.value - welfare.value,
        analytic_info_loss=analytic.info_loss,
        analytic_misallocation_loss=analytic.misallocation_loss,
        analytic_total=analytic.total,
    )


def analytic_moments(sample: AgentSample):
    return action_moments(sample.params, sample.policy.beta)
