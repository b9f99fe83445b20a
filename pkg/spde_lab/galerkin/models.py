"""Concrete SPDE instances and Nemytskii coefficient evaluation."""
from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass
from enum import StrEnum
from functools import cached_property
import logging
import math

import numpy as np
import numpy.typing as npt
from scipy.fft import dct, dst

from .errors import InvalidArgument
from .spectral import BasisKind, CoeffState, DiagonalOperator, as_state

_LOGGER = logging.getLogger(__name__)

DriftFunction = Callable[[CoeffState], npt.ArrayLike]

SQRT2 = math.sqrt(2.0)


class DriftKind(StrEnum):
    """Shape of the drift F."""

    ZERO = "zero"
    IDENTITY = "identity"
    CUSTOM = "custom"


@dataclass(frozen=True)
class MultiplicativeNoise:
    """(B(v)u)(x) = kappa v(x) u(x)."""

    kappa: float


@dataclass(frozen=True, eq=False)
class AdditiveDiagonalNoise:
    """B b_i = mu_i b_i, independent of the state."""

    mu: npt.NDArray[np.float64]

    def __post_init__(self) -> None:
        mu = np.array(self.mu, dtype=np.float64).reshape(-1)
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)


Diffusion = MultiplicativeNoise | AdditiveDiagonalNoise


@dataclass(frozen=True, eq=False)
class TransformPlan:
    """Collocation transform between coefficients and grid values.

    Sine coefficients map to the interior points j / (M + 1) through a DST-I,
    cosine coefficients to the cell midpoints (j - 1/2) / M through a
    DCT-III; analysis applies the inverse transform.
    """

    basis_kind: BasisKind
    modes: int
    points: npt.NDArray[np.float64]

    def synthesize(self, coeffs: npt.ArrayLike) -> npt.NDArray[np.float64]:
        """Grid values of a (batch of) coefficient state(s)."""
        coeffs = np.asarray(coeffs, dtype=np.float64)
        if self.basis_kind is BasisKind.DIRICHLET_SINE:
            return dst(coeffs, type=1, axis=-1) / SQRT2
        scaled = coeffs / SQRT2
        scaled[..., 0] = coeffs[..., 0]
        return dct(scaled, type=3, axis=-1)

    def analyze(self, values: npt.ArrayLike) -> CoeffState:
        """Coefficients of a (batch of) grid function(s)."""
        values = np.asarray(values, dtype=np.float64)
        if self.basis_kind is BasisKind.DIRICHLET_SINE:
            return dst(values, type=1, axis=-1) / (SQRT2 * (self.modes + 1))
        coeffs = dct(values, type=2, axis=-1) / (2 * self.modes)
        coeffs[..., 1:] *= SQRT2
        return coeffs


def make_transform(basis_kind: BasisKind | str, modes: int) -> TransformPlan:
    """Build the M-point collocation transform for a sine or cosine basis."""
    basis_kind = BasisKind(basis_kind)
    if modes < 1:
        raise InvalidArgument(f"modes: must be >= 1, got {modes}")
    if basis_kind is BasisKind.DIRICHLET_SINE:
        points = np.arange(1, modes + 1) / (modes + 1)
    elif basis_kind is BasisKind.NEUMANN_COSINE:
        points = (np.arange(1, modes + 1) - 0.5) / modes
    else:
        raise InvalidArgument("abstract bases have no collocation transform")
    points.setflags(write=False)
    _LOGGER.debug("Built %s transform with %s points", basis_kind, modes)
    return TransformPlan(basis_kind, modes, points)


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """An SPDE instance dX = [AX + F(X)] dt + B(X) dW, X_0 = initial."""

    operator: DiagonalOperator
    drift_kind: DriftKind
    diffusion: Diffusion
    initial: CoeffState
    gamma: float
    T: float
    name: str = "custom"
    custom_drift: DriftFunction | None = None
    drift_lipschitz: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "drift_kind", DriftKind(self.drift_kind))
        initial = as_state(self.operator, self.initial, "initial").copy()
        if initial.ndim != 1:
            raise InvalidArgument("initial: must be a single coefficient state")
        initial.setflags(write=False)
        object.__setattr__(self, "initial", initial)
        if not 0 <= self.gamma <= 0.5:
            raise InvalidArgument(f"gamma: must lie in [0, 1/2], got {self.gamma}")
        if not math.isfinite(self.T) or self.T <= 0:
            raise InvalidArgument(f"T: must be positive, got {self.T}")
        if isinstance(self.diffusion, AdditiveDiagonalNoise):
            if self.diffusion.mu.size != self.operator.modes:
                raise InvalidArgument(
                    f"mu: expected {self.operator.modes} entries, got {self.diffusion.mu.size}"
                )
        if self.drift_kind is DriftKind.CUSTOM and self.custom_drift is None:
            raise InvalidArgument("custom drift requires a drift function")
        if self.drift_kind is DriftKind.ZERO:
            object.__setattr__(self, "drift_lipschitz", 0.0)
        elif self.drift_kind is DriftKind.IDENTITY:
            object.__setattr__(self, "drift_lipschitz", 1.0)

    @property
    def modes(self) -> int:
        return self.operator.modes

    @property
    def is_additive(self) -> bool:
        return isinstance(self.diffusion, AdditiveDiagonalNoise)

    @cached_property
    def transform(self) -> TransformPlan:
        """Collocation transform, built on first use."""
        return make_transform(self.operator.basis_kind, self.modes)


def _unit_state(modes: int, index: int = 0) -> CoeffState:
    state = np.zeros(modes)
    state[index] = 1.0
    return state


def build_anderson(
    modes: int,
    nu: float = 0.1,
    kappa: float = 0.5,
    initial: npt.ArrayLike | None = None,
    T: float = 1.0,
) -> ModelSpec:
    """Parabolic Anderson model dX = nu X'' dt + kappa X dW on (0, 1), Dirichlet."""
    if modes < 1:
        raise InvalidArgument(f"modes: must be >= 1, got {modes}")
    if nu <= 0:
        raise InvalidArgument(f"nu: must be positive, got {nu}")
    n = np.arange(1, modes + 1)
    operator = DiagonalOperator(-nu * np.pi**2 * n**2.0, BasisKind.DIRICHLET_SINE)
    return ModelSpec(
        operator=operator,
        drift_kind=DriftKind.ZERO,
        diffusion=MultiplicativeNoise(kappa),
        initial=_unit_state(modes) if initial is None else initial,
        gamma=0.5,
        T=T,
        name="anderson",
    )


def build_chc(
    modes: int,
    kappa: float = 0.5,
    initial: npt.ArrayLike | None = None,
    T: float = 1.0,
) -> ModelSpec:
    """Linear Cahn-Hilliard-Cook type equation with A = -Δ² - Δ - I, Neumann."""
    if modes < 1:
        raise InvalidArgument(f"modes: must be >= 1, got {modes}")
    x = (np.arange(modes) * np.pi) ** 2
    operator = DiagonalOperator(-(x**2) + x - 1.0, BasisKind.NEUMANN_COSINE)
    return ModelSpec(
        operator=operator,
        drift_kind=DriftKind.IDENTITY,
        diffusion=MultiplicativeNoise(kappa),
        initial=_unit_state(modes) if initial is None else initial,
        gamma=0.25,
        T=T,
        name="chc",
    )


def build_diagonal_additive(
    modes: int, c: float, rho: float, delta: float, T: float = 1.0
) -> ModelSpec:
    """Linear model with lambda_n = -c n^rho and mu_n = |lambda_n|^delta, X_0 = 0."""
    if modes < 1:
        raise InvalidArgument(f"modes: must be >= 1, got {modes}")
    if c <= 0 or rho <= 0:
        raise InvalidArgument(f"c and rho must be positive, got c={c}, rho={rho}")
    magnitudes = c * np.arange(1, modes + 1) ** float(rho)
    return ModelSpec(
        operator=DiagonalOperator(-magnitudes, BasisKind.ABSTRACT),
        drift_kind=DriftKind.ZERO,
        diffusion=AdditiveDiagonalNoise(magnitudes**delta),
        initial=np.zeros(modes),
        gamma=0.0,
        T=T,
        name="diagonal-additive",
    )


def drift_eval(model: ModelSpec, y: npt.ArrayLike) -> CoeffState:
    """F(y) in coefficient space."""
    state = as_state(model.operator, y, "y")
    if model.drift_kind is DriftKind.ZERO:
        return np.zeros_like(state)
    if model.drift_kind is DriftKind.IDENTITY:
        return state.copy()
    value = np.asarray(model.custom_drift(state), dtype=np.float64)
    return value[..., : model.modes]


def diffusion_apply(model: ModelSpec, y: npt.ArrayLike, w: npt.ArrayLike) -> CoeffState:
    """B(y) w, the Galerkin projection of the Nemytskii product."""
    state = as_state(model.operator, y, "y")
    noise = as_state(model.operator, w, "w")
    diffusion = model.diffusion
    if isinstance(diffusion, AdditiveDiagonalNoise):
        return np.broadcast_to(diffusion.mu * noise, np.broadcast_shapes(state.shape, noise.shape)).copy()
    if diffusion.kappa == 0:
        return np.zeros(np.broadcast_shapes(state.shape, noise.shape))
    plan = model.transform
    return plan.analyze(diffusion.kappa * plan.synthesize(state) * plan.synthesize(noise))
