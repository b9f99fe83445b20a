"""Test model builders and coefficient evaluation."""

import dataclasses

import numpy as np
import pytest

from spde_lab.galerkin.errors import InvalidArgument
from spde_lab.galerkin.models import (
    AdditiveDiagonalNoise,
    DriftKind,
    ModelSpec,
    MultiplicativeNoise,
    build_anderson,
    build_chc,
    build_diagonal_additive,
    diffusion_apply,
    drift_eval,
    make_transform,
)
from spde_lab.galerkin.spectral import BasisKind, DiagonalOperator


@pytest.mark.parametrize("basis", [BasisKind.DIRICHLET_SINE, BasisKind.NEUMANN_COSINE])
@pytest.mark.parametrize("modes", [1, 2, 7, 8, 32, 64])
def test_transform_round_trip(basis: BasisKind, modes: int) -> None:
    """Test analysis inverts synthesis on every unit state and on random states."""
    plan = make_transform(basis, modes)
    units = np.eye(modes)
    np.testing.assert_allclose(plan.analyze(plan.synthesize(units)), units, atol=1e-10)
    coeffs = np.random.default_rng(modes).standard_normal((3, modes))
    np.testing.assert_allclose(plan.analyze(plan.synthesize(coeffs)), coeffs, atol=1e-12)


def test_transform_needs_a_concrete_basis() -> None:
    """Test abstract bases have no collocation points."""
    with pytest.raises(InvalidArgument):
        make_transform(BasisKind.ABSTRACT, 4)


def test_sine_synthesis_values() -> None:
    """Test the first sine mode at the collocation points."""
    plan = make_transform(BasisKind.DIRICHLET_SINE, 3)
    np.testing.assert_allclose(plan.points, [0.25, 0.5, 0.75])
    np.testing.assert_allclose(
        plan.synthesize([1.0, 0.0, 0.0]), np.sqrt(2) * np.sin(np.pi * plan.points)
    )


def test_build_anderson() -> None:
    """Test the Anderson spectrum, noise and regularity parameter."""
    model = build_anderson(4, nu=0.1, kappa=0.5)
    np.testing.assert_allclose(model.operator.eigenvalues, -0.1 * np.pi**2 * np.arange(1, 5) ** 2)
    assert model.operator.basis_kind is BasisKind.DIRICHLET_SINE
    assert model.drift_kind is DriftKind.ZERO
    assert model.diffusion == MultiplicativeNoise(0.5)
    assert model.gamma == 0.5
    np.testing.assert_array_equal(model.initial, [1.0, 0.0, 0.0, 0.0])
    with pytest.raises(InvalidArgument):
        build_anderson(4, nu=0.0)


def test_build_chc() -> None:
    """Test the Cahn-Hilliard-Cook spectrum lambda = -x^2 + x - 1, x = (n pi)^2."""
    model = build_chc(3)
    x = (np.arange(3) * np.pi) ** 2
    np.testing.assert_allclose(model.operator.eigenvalues, -(x**2) + x - 1)
    assert model.operator.eigenvalues[0] == -1.0
    assert model.drift_kind is DriftKind.IDENTITY
    assert model.drift_lipschitz == 1.0
    assert model.gamma == 0.25


def test_build_diagonal_additive() -> None:
    """Test lambda_n = -c n^rho and mu_n = |lambda_n|^delta."""
    model = build_diagonal_additive(3, 2.0, 1.0, -0.5)
    np.testing.assert_allclose(model.operator.eigenvalues, [-2.0, -4.0, -6.0])
    np.testing.assert_allclose(model.diffusion.mu, [2.0**-0.5, 0.5, 6.0**-0.5])
    assert model.is_additive
    assert not np.any(model.initial)
    with pytest.raises(InvalidArgument):
        build_diagonal_additive(3, -1.0, 1.0, 0.0)


def test_model_validation() -> None:
    """Test the structural checks on ModelSpec."""
    operator = DiagonalOperator([-1.0, -2.0])
    with pytest.raises(InvalidArgument):
        ModelSpec(operator, DriftKind.ZERO, MultiplicativeNoise(1.0), np.zeros(3), 0.5, 1.0)
    with pytest.raises(InvalidArgument):
        ModelSpec(operator, DriftKind.ZERO, MultiplicativeNoise(1.0), np.zeros(2), 0.75, 1.0)
    with pytest.raises(InvalidArgument):
        ModelSpec(operator, DriftKind.ZERO, AdditiveDiagonalNoise([1.0]), np.zeros(2), 0.0, 1.0)
    with pytest.raises(InvalidArgument):
        ModelSpec(operator, DriftKind.CUSTOM, MultiplicativeNoise(1.0), np.zeros(2), 0.0, 1.0)


def test_custom_drift() -> None:
    """Test a user drift function with a declared Lipschitz constant."""
    model = ModelSpec(
        DiagonalOperator([-1.0, -2.0]),
        DriftKind.CUSTOM,
        AdditiveDiagonalNoise([1.0, 1.0]),
        np.zeros(2),
        0.0,
        1.0,
        custom_drift=np.sin,
        drift_lipschitz=1.0,
    )
    np.testing.assert_allclose(drift_eval(model, [0.5, 1.0]), np.sin([0.5, 1.0]))


def test_drift_eval(chc, anderson) -> None:
    """Test zero and identity drifts."""
    y = np.arange(1.0, 9.0)
    np.testing.assert_array_equal(drift_eval(anderson, y), np.zeros(8))
    np.testing.assert_array_equal(drift_eval(chc, y), y)


def test_multiplicative_diffusion_of_constant(chc) -> None:
    """Test B(b_0) w = kappa w for the constant Neumann mode."""
    y = np.zeros(8)
    y[0] = 1.0
    w = np.random.default_rng(1).standard_normal(8)
    np.testing.assert_allclose(diffusion_apply(chc, y, w), 0.5 * w, atol=1e-12)


def test_multiplicative_diffusion_is_bilinear(anderson) -> None:
    """Test B(y) w is linear in y and symmetric in (y, w)."""
    rng = np.random.default_rng(2)
    y, z, w = rng.standard_normal((3, 8))
    np.testing.assert_allclose(
        diffusion_apply(anderson, y + 2 * z, w),
        diffusion_apply(anderson, y, w) + 2 * diffusion_apply(anderson, z, w),
        atol=1e-12,
    )
    np.testing.assert_allclose(
        diffusion_apply(anderson, y, w), diffusion_apply(anderson, w, y), atol=1e-12
    )


def test_zero_kappa_has_no_noise(anderson) -> None:
    """Test kappa = 0 switches the diffusion off."""
    model = dataclasses.replace(anderson, diffusion=MultiplicativeNoise(0.0))
    assert not np.any(diffusion_apply(model, np.ones(8), np.ones(8)))


def test_additive_diffusion(additive) -> None:
    """Test B b_i = mu_i b_i independent of the state."""
    w = np.arange(6.0)
    np.testing.assert_array_equal(diffusion_apply(additive, np.ones(6), w), w)
    assert diffusion_apply(additive, np.ones((2, 6)), w).shape == (2, 6)
