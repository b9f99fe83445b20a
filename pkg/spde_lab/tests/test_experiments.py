"""Test Monte Carlo estimators, rate fits and bound sweeps."""

import dataclasses
import logging
import math

import numpy as np
import pytest

from spde_lab import MonteCarloCoordinator, functionals
from spde_lab.experiments import (
    ErrorPoint,
    ExperimentReport,
    estimate_strong_error,
    estimate_weak_error,
    fit_rate,
    integrated_distance,
    lower_bound_sweep,
    oracle_check,
    perturbation_check,
    perturbation_constants,
    perturbation_sweep,
    simulate,
    strong_rate,
    weak_rate,
)
from spde_lab.galerkin.errors import InvalidArgument
from spde_lab.galerkin.models import (
    DriftKind,
    ModelSpec,
    MultiplicativeNoise,
    build_anderson,
    build_chc,
    build_diagonal_additive,
)
from spde_lab.galerkin.oracles import Provenance, exp_functional, mode_variances
from spde_lab.galerkin.spectral import DiagonalOperator

from .conftest import SEED

EXP_NEG_SQ_NORM = functionals.get_functional("exp_neg_sq_norm")


def test_registry() -> None:
    """Test the named functionals and their values."""
    registry = functionals.test_functional_registry()
    assert set(registry) == {"exp_neg_sq_norm", "sq_norm", "first_mode_sq"}
    assert registry["exp_neg_sq_norm"].value_fn(np.zeros(3)) == 1.0
    assert registry["sq_norm"].value_fn(np.array([1.0, 0.0])) == 1.0
    assert not registry["sq_norm"].bounded
    assert registry["first_mode_sq"].value_fn(np.array([3.0, 1.0])) == 9.0
    states = np.random.default_rng(3).standard_normal((50, 4))
    assert np.all(registry["exp_neg_sq_norm"].value_fn(states) <= 1.0)
    with pytest.raises(InvalidArgument):
        functionals.get_functional("nope")


def test_fit_exact_power_law() -> None:
    """Test errors = h give order 1 and r2 = 1."""
    fit = fit_rate([(0.1, 0.1), (0.05, 0.05), (0.025, 0.025)])
    assert fit.order == pytest.approx(1.0)
    assert fit.intercept == pytest.approx(0.0, abs=1e-12)
    assert fit.r2 == pytest.approx(1.0)


def test_fit_square_root() -> None:
    """Test errors = C h^{1/2}."""
    hs = [2.0**-k for k in range(2, 8)]
    fit = fit_rate([(h, 3 * h**0.5) for h in hs])
    assert fit.order == pytest.approx(0.5)
    assert math.exp(fit.intercept) == pytest.approx(3.0)


def test_fit_jittered_power_law() -> None:
    """Test a +-5% jitter keeps the order within 0.05."""
    rng = np.random.default_rng(11)
    hs = [2.0**-k for k in range(3, 11)]
    points = [(h, h**0.75 * (1 + rng.uniform(-0.05, 0.05))) for h in hs]
    assert fit_rate(points).order == pytest.approx(0.75, abs=0.05)


def test_fit_excludes_nonpositive(caplog) -> None:
    """Test zero errors are dropped with a warning and too few points fail."""
    with caplog.at_level(logging.WARNING):
        fit = fit_rate([(0.1, 0.1), (0.05, 0.0), (0.025, 0.025)])
    assert fit.order == pytest.approx(1.0)
    assert "Excluding point" in caplog.text
    with pytest.raises(InvalidArgument):
        fit_rate([(0.1, 0.1), (0.05, -1.0)])


def test_weak_error_at_reference_is_zero(anderson, coordinator) -> None:
    """Test N == N_ref gives an exact zero."""
    point = estimate_weak_error(anderson, "exponential", EXP_NEG_SQ_NORM, 16, 16, 8, SEED, coordinator)
    assert point.estimate == 0.0
    assert point.std_error == 0.0
    assert point.samples == 8


def test_weak_rate_single_reference_point(anderson, coordinator, caplog) -> None:
    """Test a sweep with only N_ref warns and fits nothing."""
    with caplog.at_level(logging.WARNING):
        report = weak_rate(anderson, "exponential", EXP_NEG_SQ_NORM, [16], 16, 4, SEED, coordinator)
    assert [p.estimate for p in report.points] == [0.0]
    assert math.isnan(report.fitted_order)
    assert "no rate can be fitted" in caplog.text


def test_weak_error_without_noise(anderson, coordinator) -> None:
    """Test kappa = 0 exponential Euler is exact, so the weak error vanishes."""
    model = dataclasses.replace(anderson, diffusion=MultiplicativeNoise(0.0))
    point = estimate_weak_error(model, "exponential", EXP_NEG_SQ_NORM, 2, 32, 4, SEED, coordinator)
    assert abs(point.estimate) < 1e-13


def test_zero_noise_runs_are_seed_independent(anderson, coordinator) -> None:
    """Test kappa = 0 reports do not depend on the seed."""
    model = dataclasses.replace(anderson, diffusion=MultiplicativeNoise(0.0))
    a = strong_rate(model, "linear-implicit", [2, 4], 32, 4, 1, coordinator)
    b = strong_rate(model, "linear-implicit", [2, 4], 32, 4, 2, coordinator)
    assert a == b


def test_weak_error_matches_oracle(additive, coordinator) -> None:
    """Test the coupled estimator against the Gaussian closed forms."""
    n, n_ref = 4, 64
    point = estimate_weak_error(additive, "exponential", EXP_NEG_SQ_NORM, n, n_ref, 2000, SEED, coordinator)
    lam, mu = additive.operator.eigenvalues, additive.diffusion.mu
    expected = exp_functional(
        mode_variances(lam, mu, additive.T, additive.T / n_ref, Provenance.EXP_EULER_Y1)
    ) - exp_functional(mode_variances(lam, mu, additive.T, additive.T / n, Provenance.EXP_EULER_Y1))
    assert abs(point.estimate - expected) < 4 * point.std_error


def test_strong_error_matches_weighted_sum(additive, coordinator) -> None:
    """Test E||Y^{N_ref} - Y^N||^2 for exponential Euler against its weight sum."""
    n, n_ref = 4, 32
    point = estimate_strong_error(additive, "exponential", n, n_ref, 2000, SEED, coordinator)
    T = additive.T
    h_fine, h = T / n_ref, T / n
    s = np.arange(n_ref) * h_fine
    floor = np.floor(s / h + 1e-9) * h
    lam = additive.operator.eigenvalues[:, None]
    weights = (np.exp(lam * (T - s)) - np.exp(lam * (T - floor))) ** 2
    expected = math.sqrt(np.sum(additive.diffusion.mu[:, None] ** 2 * weights) * h_fine)
    assert abs(point.estimate - expected) < 4 * point.std_error


def test_strong_errors_decrease(anderson, coordinator) -> None:
    """Test the strong error falls as N doubles and a positive order is fitted."""
    report = strong_rate(anderson, "linear-implicit", [2, 32], 128, 16, SEED, coordinator)
    assert [p.N for p in report.points] == [2, 32]
    assert report.points[0].estimate > report.points[1].estimate
    assert report.fitted_order > 0


def test_anderson_strong_order() -> None:
    """Test the exponential Euler strong order for nu = 0.1, kappa = 0.5, M = 64.

    The error behaves like N^{-1/4}; a finite reference steepens the fit a little.
    """
    model = build_anderson(64, nu=0.1, kappa=0.5)
    coordinator = MonteCarloCoordinator(threads=1, chunk_size=32)
    report = strong_rate(model, "exponential", [4, 8, 16, 32], 256, 128, SEED, coordinator)
    estimates = [p.estimate for p in report.points]
    assert estimates == sorted(estimates, reverse=True)
    assert 0.15 <= report.fitted_order <= 0.45


def test_weak_rate_follows_closed_form(additive, coordinator) -> None:
    """Test the coupled weak errors and their fitted order against the Gaussian oracle."""
    n_list, n_ref = [2, 4, 8], 64
    report = weak_rate(additive, "exponential", EXP_NEG_SQ_NORM, n_list, n_ref, 2000, SEED, coordinator)
    lam, mu, T = additive.operator.eigenvalues, additive.diffusion.mu, additive.T

    def gaussian_mean(n: int) -> float:
        return exp_functional(mode_variances(lam, mu, T, T / n, Provenance.EXP_EULER_Y1))

    expected = {n: gaussian_mean(n_ref) - gaussian_mean(n) for n in n_list}
    for point in report.points:
        assert abs(point.estimate - expected[point.N]) < 4 * point.std_error
    oracle_fit = fit_rate([(T / n, abs(error)) for n, error in expected.items()])
    assert report.fitted_order == pytest.approx(oracle_fit.order, abs=0.15)


def test_exact_samples_match_product_formula() -> None:
    """Test E[exp(-||X_T||^2)] from exact Gaussian samples at M = 64."""
    model = build_diagonal_additive(64, np.pi**2, 2.0, 0.0)
    coordinator = MonteCarloCoordinator(threads=2, chunk_size=1000)
    report = oracle_check(model, "exact-linear", EXP_NEG_SQ_NORM, [2], 20_000, SEED, coordinator)
    (point,) = report.points
    assert point.std_error < 1e-3
    assert abs(point.estimate) <= 4 * point.std_error


@pytest.mark.parametrize("threads", [4, 8])
def test_reports_do_not_depend_on_thread_count(anderson, coordinator, threads: int) -> None:
    """Test bitwise-identical results for one, four and eight workers."""
    threaded_coordinator = MonteCarloCoordinator(threads=threads, chunk_size=4)
    single = weak_rate(anderson, "exponential", EXP_NEG_SQ_NORM, [2, 4], 16, 10, SEED, coordinator)
    threaded = weak_rate(
        anderson, "exponential", EXP_NEG_SQ_NORM, [2, 4], 16, 10, SEED, threaded_coordinator
    )
    assert single == threaded
    assert strong_rate(anderson, "linear-implicit", [2, 4], 16, 10, SEED, coordinator) == strong_rate(
        anderson, "linear-implicit", [2, 4], 16, 10, SEED, threaded_coordinator
    )


def test_resolution_checks(anderson, coordinator) -> None:
    """Test N must divide N_ref and samples must be at least 2."""
    with pytest.raises(InvalidArgument):
        estimate_strong_error(anderson, "exponential", 3, 16, 4, SEED, coordinator)
    with pytest.raises(InvalidArgument):
        estimate_strong_error(anderson, "exponential", 4, 16, 1, SEED, coordinator)


def test_simulate(chc, coordinator) -> None:
    """Test per-N means of phi(Y_T) with standard errors."""
    report = simulate(chc, "linear-implicit", EXP_NEG_SQ_NORM, [4, 8], 6, SEED, coordinator)
    assert [p.N for p in report.points] == [4, 8]
    for point in report.points:
        assert 0 < point.estimate <= 1
        assert point.std_error >= 0


def test_integrated_distance_vanishes_for_additive_noise(additive, coordinator) -> None:
    """Test Y-bar and exponential Euler differ by the exact/scheme gap only."""
    report = integrated_distance(additive, [4, 8], 6, SEED, rho=0.5, coordinator=coordinator)
    assert all(p.estimate > 0 for p in report.points)
    model = dataclasses.replace(additive, diffusion=dataclasses.replace(additive.diffusion, mu=np.zeros(6)))
    zero = integrated_distance(model, [4, 8], 4, SEED, coordinator=coordinator)
    assert all(p.estimate == 0 for p in zero.points)


@pytest.mark.parametrize("scheme", [1, 2])
def test_lower_bound_sweep_square_root_rate(scheme: int) -> None:
    """Test the exact variance gap decays like h^{1/2} and dominates the bound."""
    hs = [2.0**-k for k in range(6, 13)]
    report = lower_bound_sweep(np.pi**2, 2.0, 0.0, 1.0, 2000, hs, scheme)
    assert report.passed
    assert 0.45 <= report.fitted_order <= 0.55
    assert all(p.estimate >= p.bound for p in report.points)
    assert all(p.samples == 0 for p in report.points)


def test_lower_bound_sweep_linear_rate() -> None:
    """Test delta = -1/2 gives a first-order gap."""
    hs = [2.0**-k for k in range(8, 13)]
    report = lower_bound_sweep(np.pi**2, 2.0, -0.5, 1.0, 2000, hs, 1)
    assert 0.9 <= report.fitted_order <= 1.05


def test_lower_bound_sweep_capped_exponent() -> None:
    """Test delta = -1/4 sits between the square-root and linear regimes."""
    hs = [2.0**-k for k in range(6, 13)]
    report = lower_bound_sweep(np.pi**2, 2.0, -0.25, 1.0, 2000, hs, 2)
    assert report.passed
    assert 0.5 < report.fitted_order < 1.0


def test_weak_lower_bound_sweep() -> None:
    """Test the exp(-||.||^2) gap against both bound variants."""
    hs = [2.0**-k for k in range(3, 8)]
    for laplacian in (False, True):
        report = lower_bound_sweep(np.pi**2, 2.0, 0.0, 1.0, 500, hs, 2, weak=True, laplacian=laplacian)
        assert report.passed
        assert all(p.estimate > 0 for p in report.points)
    with pytest.raises(InvalidArgument):
        lower_bound_sweep(1.0, 2.0, 0.0, 1.0, 10, hs, 1, laplacian=True)
    with pytest.raises(InvalidArgument):
        lower_bound_sweep(np.pi**2, 2.0, 0.0, 1.0, 10, hs, 3)


def test_lower_bound_sweep_does_not_sample(monkeypatch) -> None:
    """Test deterministic sweeps never touch the random generator."""

    def poisoned(*args, **kwargs):
        raise AssertionError("random generator used")

    monkeypatch.setattr(np.random, "Philox", poisoned)
    monkeypatch.setattr(np.random, "default_rng", poisoned)
    report = lower_bound_sweep(np.pi**2, 2.0, 0.0, 1.0, 100, [0.25, 0.125], 1)
    assert len(report.points) == 2


def test_lower_bound_tail_warning(caplog) -> None:
    """Test a short mode sum warns about the truncated variance tail."""
    with caplog.at_level(logging.WARNING):
        lower_bound_sweep(np.pi**2, 2.0, 0.0, 1.0, 5, [0.5, 0.25], 1)
    assert "variance tail" in caplog.text


@pytest.mark.parametrize("kind", ["exact-linear", "exponential", "linear-implicit"])
def test_oracle_check_passes(additive, coordinator, kind: str) -> None:
    """Test Monte Carlo means agree with the closed forms."""
    report = oracle_check(additive, kind, EXP_NEG_SQ_NORM, [4, 8], 400, SEED, coordinator)
    assert [p.N for p in report.points] == [4, 8]
    for point in report.points:
        assert abs(point.estimate) <= 4 * point.std_error


def test_oracle_check_needs_additive_model(anderson, additive, coordinator) -> None:
    """Test the oracle check refuses models without closed forms."""
    with pytest.raises(InvalidArgument):
        oracle_check(anderson, "exponential", EXP_NEG_SQ_NORM, [4], 10, SEED, coordinator)
    with pytest.raises(InvalidArgument):
        oracle_check(additive, "integrated-counterpart", EXP_NEG_SQ_NORM, [4], 10, SEED, coordinator)


def test_perturbation_identical_initial_values(anderson, coordinator) -> None:
    """Test xi_a == xi_b gives LHS = 0 and a pass."""
    result = perturbation_check(
        anderson, "exponential", 8, 4, anderson.initial, anderson.initial, SEED, coordinator=coordinator
    )
    assert result.lhs == 0.0
    assert result.passed


def test_perturbation_without_noise(anderson, coordinator) -> None:
    """Test the contraction case: LHS <= ||xi_a - xi_b|| <= RHS / sqrt(2)."""
    model = dataclasses.replace(anderson, diffusion=MultiplicativeNoise(0.0))
    xi_b = model.initial + 0.5 * np.ones(8)
    result = perturbation_check(model, "linear-implicit", 8, 2, model.initial, xi_b, SEED, coordinator=coordinator)
    assert result.diffusion_constant == 0.0
    assert result.lhs <= result.distance * (1 + 1e-12)
    assert result.rhs >= math.sqrt(2) * result.distance
    assert result.passed


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_perturbation_anderson(anderson, coordinator, seed: int) -> None:
    """Test the inequality for the Anderson model with kappa = 0.5."""
    report = perturbation_sweep(anderson, "linear-implicit", 16, 8, [0.1, 1.0], [seed], coordinator=coordinator)
    assert report.passed
    assert all(p.estimate <= p.bound for p in report.points)


def test_perturbation_long_horizon(coordinator) -> None:
    """Test a large calE argument (T = 4 with a drift) still yields a checked bound."""
    model = build_chc(4, T=4.0)
    xi_b = model.initial + 0.1
    result = perturbation_check(
        model, "linear-implicit", 8, 2, model.initial, xi_b, SEED, coordinator=coordinator
    )
    assert result.drift_constant > 1.0
    assert result.rhs > result.lhs
    assert result.passed


def test_perturbation_constants(anderson, chc) -> None:
    """Test the drift and diffusion constants per model."""
    drift, diffusion = perturbation_constants(anderson, "exponential", 16)
    assert drift == 0.0
    assert diffusion > 0
    drift, _ = perturbation_constants(chc, "linear-implicit", 16)
    assert drift == 1.0


def test_perturbation_custom_drift_needs_lipschitz(coordinator) -> None:
    """Test custom drifts without a declared constant are rejected."""
    model = ModelSpec(
        DiagonalOperator([-1.0, -4.0]),
        DriftKind.CUSTOM,
        MultiplicativeNoise(0.0),
        np.zeros(2),
        0.0,
        1.0,
        custom_drift=np.tanh,
    )
    with pytest.raises(InvalidArgument):
        perturbation_check(model, "exponential", 4, 2, np.zeros(2), np.ones(2), SEED, coordinator=coordinator)


def test_report_dict_round_trip() -> None:
    """Test to_dict/from_dict and sorting by N."""
    report = ExperimentReport(
        "weak-rate",
        (ErrorPoint(8, 0.125, 0.1, 0.01, 10), ErrorPoint(4, 0.25, 0.2, 0.02, 10)),
        fitted_order=1.0,
        fit_intercept=0.3,
        fit_r2=1.0,
        residuals=(0.0, 0.0),
        config={"mc.seed": 1},
        seed=1,
    )
    assert [p.N for p in report.points] == [4, 8]
    assert ExperimentReport.from_dict(report.to_dict()) == report


def test_error_point_validation() -> None:
    """Test negative standard errors are rejected."""
    with pytest.raises(InvalidArgument):
        ErrorPoint(4, 0.25, 0.1, -1.0, 10)
