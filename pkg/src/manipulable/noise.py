"""Estimation with noise: flatten a fitted rule by training on a noised regressor.

Training data (x, eta) comes from agents facing some slope ``train_beta``. Adding
independent noise to x (never to eta) attenuates the regression slope toward
zero; enough noise hits any target slope below the noiseless one. A constant
shift of the noised regressor then centers the deployed rule so the average
allocation equals the mean natural action. At deployment the rule is applied to
raw, un-noised actions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .errors import SolverError, TargetUnreachableError, ValidationError
from .model import ModelParams, Policy, action_moments
from .simulation import (
    STREAM_NOISE,
    AgentSample,
    Estimate,
    _check_seed,
    ols,
    sample_population,
    standard_normal_draws,
)

# (x, eta) -> (slope, intercept)
Estimator = Callable[[np.ndarray, np.ndarray], tuple]


def ols_estimator(x, eta):
    fit = ols(x, eta)
    return fit.slope, fit.intercept


@dataclass(frozen=True)
class NoisySpec:
    shift: float = 0.0
    sigma_eps: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.sigma_eps) and self.sigma_eps >= 0):
            raise ValidationError(f"sigma_eps must be nonnegative, got {self.sigma_eps}")
        if not math.isfinite(self.shift):
            raise ValidationError("shift must be finite")
        _check_seed(self.seed)


@dataclass(frozen=True)
class NoisedDataset:
    x_prime: np.ndarray
    eta: np.ndarray

    def to_csv(self, path):
        from .formats import write_csv

        write_csv(path, ["x_prime", "eta"], np.column_stack([self.x_prime, self.eta]))


@dataclass(frozen=True)
class CalibrationResult:
    sigma_eps_star: float
    shift_star: float
    achieved_slope: float
    deployed_policy: Policy
    deployed_mean_allocation: float
    train_beta: float
    target: float


def noised_dataset(sample: AgentSample, spec: NoisySpec, workers: int = 1) -> NoisedDataset:
    """x' = x + c + eps with eps ~ N(0, sigma_eps^2) i.i.d.; eta is passed through untouched."""
    if spec.sigma_eps == 0.0:
        x_prime = sample.x + spec.shift
    else:
        eps = standard_normal_draws(spec.seed, sample.n, 1, STREAM_NOISE, workers)[:, 0]
        x_prime = sample.x + spec.shift + spec.sigma_eps * eps
    return NoisedDataset(x_prime=x_prime, eta=sample.eta)


def fit_noised(dataset: NoisedDataset, estimator: Estimator = ols_estimator) -> Policy:
    slope, intercept = estimator(dataset.x_prime, dataset.eta)
    return Policy(slope, intercept)


def attenuated_slope_analytic(params: ModelParams, train_beta: float, sigma_eps: float) -> float:
    """Population slope of eta on x' = x + c + eps: Cov(x, eta) / (Var(x) + sigma_eps^2)."""
    if sigma_eps < 0:
        raise ValidationError("sigma_eps must be nonnegative")
    _, var, cov = action_moments(params, train_beta)
    return cov / (var + sigma_eps**2)


def centering_shift(params: ModelParams, train_beta: float, slope: float) -> float:
    """Shift c that makes the deployed mean allocation equal mu_eta.

    The fitted intercept is mu_eta - b*(E[x_train] + c). Deployed agents respond
    to slope b, so E[x_deploy] = mu_eta + m*b*mu_gamma, and the mean allocation
    is mu_eta + b*(m*mu_gamma*(b - train_beta) - c).
    """
    return params.m * params.mu_gamma * (slope - train_beta)


def calibrate_to_target(params: ModelParams, train_beta: float, target_beta: float, tol: float = 1e-10) -> CalibrationResult:
    """Noise level and shift that turn the train-time regression into ``target_beta``."""
    mean_x, var, cov = action_moments(params, train_beta)
    bhat = cov / var
    if not target_beta > 0:
        raise TargetUnreachableError(f"target must be positive, got {target_beta}")
    if target_beta > bhat * (1 + tol):
        raise TargetUnreachableError(
            f"target {target_beta} exceeds the noiseless slope {bhat} at train_beta={train_beta}"
        )
    noise_var = max(cov / target_beta - var, 0.0)
    sigma = math.sqrt(noise_var)
    achieved = attenuated_slope_analytic(params, train_beta, sigma)

    c = centering_shift(params, train_beta, achieved)
    intercept = params.mu_eta - achieved * (mean_x + c)
    deployed = Policy(achieved, intercept)
    deploy_mean_x, _, _ = action_moments(params, achieved)
    mean_alloc = deployed(deploy_mean_x)

    scale = max(1.0, abs(params.mu_eta))
    if abs(achieved - target_beta) > max(tol, 1e-12) * max(1.0, target_beta):
        raise SolverError(f"calibration missed target: {achieved} vs {target_beta}")
    if abs(mean_alloc - params.mu_eta) > 1e-9 * scale:
        raise SolverError(f"deployed mean allocation {mean_alloc} != mu_eta {params.mu_eta}")
    return CalibrationResult(
        sigma_eps_star=sigma,
        shift_star=c,
        achieved_slope=achieved,
        deployed_policy=deployed,
        deployed_mean_allocation=mean_alloc,
        train_beta=float(train_beta),
        target=float(target_beta),
    )


def calibrate_noise_level(
    sample: AgentSample,
    target_beta: float,
    seed: int,
    estimator: Estimator = ols_estimator,
    sigma_max: float | None = None,
    xtol: float = 1e-10,
) -> float:
    """Noise std at which ``estimator`` fitted on the noised sample returns ``target_beta``.

    Generic path for estimators without a closed-form attenuation. The noise
    draws are held fixed across trial levels (common random numbers), so the
    fitted slope varies smoothly with sigma.
    """
    def slope_at(sigma):
        ds = noised_dataset(sample, NoisySpec(0.0, sigma, seed))
        return estimator(ds.x_prime, ds.eta)[0] - target_beta

    base = slope_at(0.0)
    if base < 0:
        raise TargetUnreachableError("target exceeds the noiseless fitted slope")
    if base == 0:
        return 0.0
    hi = sigma_max or max(1.0, float(np.std(sample.x)))
    while slope_at(hi) > 0:
        hi *= 2.0
        if hi > 1e12:
            raise TargetUnreachableError("could not attenuate the slope down to the target")
    return brentq(slope_at, 0.0, hi, xtol=xtol)


@dataclass(frozen=True)
class DeploymentResult:
    empirical_loss: Estimate
    mean_allocation: Estimate


def deploy_and_evaluate(params: ModelParams, result: CalibrationResult, n: int, seed: int, workers: int = 1) -> DeploymentResult:
    """Fresh population responding to the deployed rule; the rule sees raw actions."""
    policy = result.deployed_policy
    sample = sample_population(params, policy, n, seed, workers)
    y = policy(sample.x)
    loss = (y - sample.eta) ** 2
    root_n = math.sqrt(sample.n)
    return DeploymentResult(
        empirical_loss=Estimate(float(loss.mean()), float(loss.std(ddof=1) / root_n)),
        mean_allocation=Estimate(float(y.mean()), float(y.std(ddof=1) / root_n)),
    )
