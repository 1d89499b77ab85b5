import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import model_params
from manipulable.errors import ValidationError
from manipulable.model import (
    ModelParams,
    action_moments,
    best_response_beta,
    best_response_beta_derivative,
    normalized_loss,
    normalized_loss_derivative,
    welfare_loss,
)
from manipulable.solvers import (
    CONVERGED,
    CYCLING,
    constant_policy,
    cubic_discriminant,
    fixed_point_cubic,
    fixed_points,
    fixed_points_k,
    iterate_best_response,
    naive_policy,
    optimal_beta,
    optimal_loss,
    optimal_policy,
    rho_with_three_fixed_points,
    solve_all,
)

BETA_FP_K1 = 0.6823278038280193  # real root of b^3 + b - 1
BETA_STAR_K1 = 0.5897545123014327  # real root of 2b^3 + b - 1


def test_naive_and_constant(fig2):
    assert naive_policy(fig2).beta == 1.0
    assert naive_policy(fig2).beta0 == 0.0
    p = ModelParams(mu_eta=3.0)
    assert constant_policy(p).beta == 0.0
    assert constant_policy(p).beta0 == 3.0
    assert welfare_loss(p, constant_policy(p)) == pytest.approx(1.0)
    p = ModelParams(mu_eta=5.0)
    assert (naive_policy(p).beta, naive_policy(p).beta0) == (1.0, 0.0)
    p = ModelParams(mu_eta=3.0, sigma_eta=2.0)
    base = welfare_loss(p, constant_policy(p))
    assert base == pytest.approx(4.0)
    from manipulable.model import Policy
    for b0 in np.linspace(-5, 10, 31):
        assert welfare_loss(p, Policy(0.0, b0)) >= base


def test_fig2_fixed_point(fig2):
    (b,) = fixed_points(fig2)
    assert b == pytest.approx(0.682, abs=5e-4)
    assert b == pytest.approx(BETA_FP_K1, abs=1e-12)


def test_fixed_point_tends_to_one_as_k_vanishes():
    (b,) = fixed_points_k(1e-6, 0.3)
    assert b == pytest.approx(1.0, abs=1e-5)


def test_three_fixed_points_region():
    rho = rho_with_three_fixed_points(0.24)
    assert rho is not None and -1 < rho < 0
    roots = fixed_points_k(0.24, rho)
    assert len(roots) == 3
    p = ModelParams.from_k(0.24, rho)
    for b in roots:
        assert best_response_beta(p, b) == pytest.approx(b, abs=1e-10)


def test_discriminant_sign_matches_root_count():
    rng = np.random.default_rng(3)
    for _ in range(500):
        k = 10 ** rng.uniform(-2, 1)
        rho = rng.uniform(-0.999, 0.999)
        disc = cubic_discriminant(*fixed_point_cubic(k, rho))
        if abs(disc) < 1e-9:
            continue
        assert len(fixed_points_k(k, rho)) == (3 if disc > 0 else 1)


@given(model_params(rho=st.floats(0.0, 0.99)))
def test_unique_fixed_point_in_unit_interval_for_nonnegative_rho(p):
    nonneg = [b for b in fixed_points(p) if b >= 0]
    assert len(nonneg) == 1
    assert 0 < nonneg[0] < 1


@given(model_params())
def test_positive_fixed_point_exists(p):
    roots = fixed_points(p)
    assert any(b > 0 for b in roots)
    assert roots == sorted(roots)


@given(st.floats(1e-2, 1e2), st.floats(-0.99, 0.99))
@settings(max_examples=300)
def test_fixed_points_match_numpy_roots(k, rho):
    coeffs = fixed_point_cubic(k, rho)
    ref = np.roots(coeffs)
    ref = ref[np.abs(ref.imag) < 1e-9].real
    ours = fixed_points_k(k, rho)
    for r in ref:
        if abs(np.polyval(np.polyder(coeffs), r)) > 1e-4:
            assert min(abs(o - r) for o in ours) < 1e-8


def test_fig2_optimum(fig2):
    opt = optimal_policy(fig2)
    assert opt.beta == pytest.approx(0.590, abs=5e-4)
    assert opt.beta == pytest.approx(BETA_STAR_K1, abs=1e-12)
    assert best_response_beta(fig2, opt.beta) == pytest.approx(0.74, abs=0.01)
    assert optimal_loss(fig2) < welfare_loss(fig2, optimal_policy(fig2)) + 1e-12


def test_optimum_at_three_quarters():
    for rho in (-0.9, -0.5, 0.0, 0.5, 0.9):
        assert optimal_beta(0.75, rho) == pytest.approx(2 / 3, abs=1e-12)


def _grid_argmin(k, rho, step=1e-4):
    grid = np.arange(0.0, 2.0 + step / 2, step)
    b = grid
    loss = (k * b * b + b - 1) ** 2 + 2 * (1 - rho) * b * b * (1 - b) * k
    return grid[np.argmin(loss)]


def test_optimum_matches_grid_oracle():
    rng = np.random.default_rng(11)
    for _ in range(200):
        k = 10 ** rng.uniform(-2, 2)
        rho = rng.uniform(-0.99, 0.99)
        assert optimal_beta(k, rho) == pytest.approx(_grid_argmin(k, rho), abs=2e-4)


@given(model_params())
def test_optimal_policy_centers_allocation(p):
    opt = optimal_policy(p)
    mean_x = action_moments(p, opt.beta)[0]
    assert opt(mean_x) == pytest.approx(p.mu_eta, abs=1e-9 * (1 + abs(p.mu_eta) + abs(mean_x)))


@given(model_params())
@settings(max_examples=200)
def test_optimum_beats_perturbations(p):
    opt = optimal_policy(p)
    base = welfare_loss(p, opt)
    for db, db0 in ((1e-3, 0), (-1e-3, 0), (0, 1e-3), (0, -1e-3)):
        from manipulable.model import Policy
        assert welfare_loss(p, Policy(opt.beta + db, opt.beta0 + db0)) >= base - 1e-12 * (1 + base)


@given(model_params())
@settings(max_examples=200)
def test_solution_invariants(p):
    sol = solve_all(p)
    d = sol.diagnostics
    assert d["optimal_positive"]
    assert d["optimal_below_positive_fixed_points"]
    assert d["optimal_underutilizes_data"]
    assert d["loss_slopes_positive"]
    assert sol.optimal_loss <= min(loss for _, loss in sol.fixed_points) * (1 + 1e-12)
    assert sol.optimal_loss <= d["constant_loss"] * (1 + 1e-12)
    assert d["constant_loss"] == pytest.approx(p.sigma_eta**2)


def test_fig2_solution_losses(fig2):
    sol = solve_all(fig2)
    ((fp, fp_loss),) = sol.fixed_points
    assert fp_loss == pytest.approx(normalized_loss(1.0, 0.0, BETA_FP_K1), rel=1e-12)
    assert sol.optimal_loss == pytest.approx(normalized_loss(1.0, 0.0, BETA_STAR_K1), rel=1e-12)
    assert sol.optimal_loss < fp_loss < sol.diagnostics["constant_loss"]
    assert sol.diagnostics["naive_loss"] == pytest.approx(1.0)
    assert sol.diagnostics["naive_loss"] >= sol.diagnostics["constant_loss"]
    assert sol.diagnostics["best_response_at_optimum"] == pytest.approx(0.742, abs=5e-4)


def test_slope_only_depends_on_k():
    a = ModelParams(mu_eta=4.0, mu_gamma=-2.0, sigma_eta=2.0, sigma_gamma=3.0, rho=0.3, m=0.5)
    b = ModelParams.from_k(a.k, a.rho)
    assert optimal_policy(a).beta == pytest.approx(optimal_policy(b).beta, abs=1e-14)
    assert fixed_points(a) == pytest.approx(fixed_points(b), abs=1e-14)


def test_iteration_converges_to_stable_fixed_point(fig2):
    trace = iterate_best_response(fig2, 1.0)
    assert trace.status == CONVERGED
    assert trace.beta == pytest.approx(BETA_FP_K1, abs=1e-10)
    assert abs(best_response_beta_derivative(fig2, trace.beta)) < 1


def test_iteration_from_a_fixed_point_stops_immediately(fig2):
    trace = iterate_best_response(fig2, BETA_FP_K1)
    assert trace.status == CONVERGED
    assert trace.iterations == 0


def test_iteration_first_step_is_naive(fig2):
    trace = iterate_best_response(fig2, 0.0, max_iter=3)
    assert trace.iterates[1] == (1, 1.0)


def test_iteration_detects_cycle_around_unstable_fixed_point():
    p = ModelParams.from_k(5.0, 0.0)
    (b,) = fixed_points(p)
    assert abs(best_response_beta_derivative(p, b)) > 1
    trace = iterate_best_response(p, 0.0, max_iter=10000)
    assert trace.status == CYCLING


def test_iteration_validates():
    with pytest.raises(ValidationError):
        iterate_best_response(ModelParams(), 0.5, max_iter=0)


def test_fixed_point_runtime(fig2):
    best = math.inf
    for _ in range(5):
        t = time.perf_counter()
        fixed_points(fig2)
        optimal_policy(fig2)
        best = min(best, time.perf_counter() - t)
    assert best < 0.01


def test_derivative_positive_at_fixed_points():
    rng = np.random.default_rng(5)
    for _ in range(300):
        k = 10 ** rng.uniform(-2, 2)
        rho = rng.uniform(-0.99, 0.99)
        for b in fixed_points_k(k, rho):
            assert normalized_loss_derivative(k, rho, b) > 0
