"""Shared fixtures for tests."""

from pathlib import Path

import numpy as np
import pytest

from spde_lab import MonteCarloCoordinator
from spde_lab.galerkin.models import build_anderson, build_chc, build_diagonal_additive
from spde_lab.galerkin.noise import sample_increments
from spde_lab.galerkin.spectral import BasisKind, DiagonalOperator

SEED = 20140101


@pytest.fixture
def small_operator() -> DiagonalOperator:
    """Four-mode Dirichlet heat operator."""
    n = np.arange(1, 5)
    return DiagonalOperator(-(np.pi**2) * n**2.0, BasisKind.DIRICHLET_SINE)


@pytest.fixture
def anderson():
    """Small parabolic Anderson model."""
    return build_anderson(8)


@pytest.fixture
def chc():
    """Small linear Cahn-Hilliard-Cook model."""
    return build_chc(8)


@pytest.fixture
def additive():
    """Small diagonal additive model with lambda_n = -pi^2 n^2, mu_n = 1."""
    return build_diagonal_additive(6, np.pi**2, 2.0, 0.0)


@pytest.fixture
def anderson_bundle(anderson):
    """Eight coupled samples at 64 steps."""
    return sample_increments(anderson.modes, 64, anderson.T, SEED, range(8))


@pytest.fixture
def coordinator() -> MonteCarloCoordinator:
    """Single-threaded coordinator with small chunks."""
    return MonteCarloCoordinator(threads=1, chunk_size=4)


@pytest.fixture
def write_config(tmp_path: Path):
    """Write an INI run configuration and return its path."""

    def write(text: str) -> Path:
        path = tmp_path / "run.ini"
        path.write_text(text, encoding="utf-8")
        return path

    return write
