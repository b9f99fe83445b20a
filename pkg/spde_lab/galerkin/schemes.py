"""Euler-type time integrators on the Galerkin coefficient space."""
from __future__ import annotations

from dataclasses import dataclass
from enum import StrEnum
import logging
import math

import numpy as np
import numpy.typing as npt

from .const import PHI_SERIES_THRESHOLD
from .errors import InvalidArgument
from .models import DriftKind, ModelSpec, diffusion_apply, drift_eval
from .noise import NoiseBundle
from .spectral import (
    CoeffState,
    DiagonalOperator,
    TimeGrid,
    as_state,
    resolvent_factors,
    semigroup_factors,
)

_LOGGER = logging.getLogger(__name__)


class SchemeKind(StrEnum):
    """Time discretization."""

    EXPONENTIAL_EULER = "exponential"
    LINEAR_IMPLICIT_EULER = "linear-implicit"
    INTEGRATED_COUNTERPART = "integrated-counterpart"
    EXACT_LINEAR_ADDITIVE = "exact-linear"

    @property
    def requires_convolution(self) -> bool:
        """Whether the scheme consumes stochastic-convolution increments."""
        return self in (SchemeKind.INTEGRATED_COUNTERPART, SchemeKind.EXACT_LINEAR_ADDITIVE)

    def check_applicable(self, model: ModelSpec) -> None:
        """Raise InvalidArgument if the scheme cannot integrate ``model``."""
        if self is SchemeKind.EXACT_LINEAR_ADDITIVE and not (
            model.is_additive and model.drift_kind is DriftKind.ZERO
        ):
            raise InvalidArgument(
                f"{self} needs zero drift and additive diagonal noise, model is {model.name}"
            )


@dataclass(frozen=True, eq=False)
class SchemeRun:
    """Result of integrating one block of samples."""

    kind: SchemeKind
    N: int
    terminal: CoeffState
    path: npt.NDArray[np.float64] | None = None


@dataclass(frozen=True, eq=False)
class ExactLinearSample:
    """Coupled terminal values of the exact solution and both Euler schemes."""

    exact: CoeffState
    exponential: CoeffState
    implicit: CoeffState


def phi_factors(op: DiagonalOperator, h: float) -> npt.NDArray[np.float64]:
    """Diagonal of D_h = A^{-1}(e^{hA} - I), i.e. (e^{lambda h} - 1) / lambda."""
    if not math.isfinite(h) or h <= 0:
        raise InvalidArgument(f"h: must be positive, got {h}")
    x = op.eigenvalues * h
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = np.expm1(x) / op.eigenvalues
    return np.where(np.abs(x) < PHI_SERIES_THRESHOLD, h * (1.0 + 0.5 * x), direct)


def _frozen_step(model: ModelSpec, y: CoeffState, dW: CoeffState, h: float) -> CoeffState:
    """y + h F(y) + B(y) dW."""
    update = y + diffusion_apply(model, y, dW)
    if model.drift_kind is not DriftKind.ZERO:
        update = update + h * drift_eval(model, y)
    return update


def exp_euler_step(model: ModelSpec, y: npt.ArrayLike, dW: npt.ArrayLike, h: float) -> CoeffState:
    """e^{hA}(y + h F(y) + B(y) dW)."""
    state = as_state(model.operator, y, "y")
    return semigroup_factors(model.operator, h) * _frozen_step(model, state, dW, h)


def implicit_euler_step(
    model: ModelSpec, y: npt.ArrayLike, dW: npt.ArrayLike, h: float
) -> CoeffState:
    """(I - hA)^{-1}(y + h F(y) + B(y) dW)."""
    state = as_state(model.operator, y, "y")
    return resolvent_factors(model.operator, h) * _frozen_step(model, state, dW, h)


def _step_factors(model: ModelSpec, kind: SchemeKind, h: float) -> npt.NDArray[np.float64]:
    if kind is SchemeKind.LINEAR_IMPLICIT_EULER:
        return resolvent_factors(model.operator, h)
    if kind is SchemeKind.EXPONENTIAL_EULER:
        return semigroup_factors(model.operator, h)
    raise InvalidArgument(f"{kind} is not a one-step Euler scheme")


def _check_bundle(model: ModelSpec, bundle: NoiseBundle) -> TimeGrid:
    if bundle.modes != model.modes:
        raise InvalidArgument(f"bundle has {bundle.modes} modes, model has {model.modes}")
    if not math.isclose(bundle.T, model.T, rel_tol=1e-12):
        raise InvalidArgument(f"bundle horizon {bundle.T} differs from model horizon {model.T}")
    return TimeGrid(model.T, bundle.N)


def _initial_block(model: ModelSpec, bundle: NoiseBundle) -> CoeffState:
    return np.broadcast_to(model.initial, (bundle.samples, model.modes)).copy()


def _check_convolution(bundle: NoiseBundle, conv: npt.NDArray[np.float64] | None) -> None:
    if conv is None:
        raise InvalidArgument("missing convolution increments")
    if conv.shape != bundle.increments.shape:
        raise InvalidArgument(
            f"convolution increments have shape {conv.shape}, bundle has {bundle.increments.shape}"
        )


def simulate_path(
    model: ModelSpec,
    kind: SchemeKind | str,
    bundle: NoiseBundle,
    conv: npt.NDArray[np.float64] | None = None,
    keep_path: bool = False,
) -> SchemeRun:
    """Integrate every sample of ``bundle`` from model.initial to model.T.

    The scheme runs at the bundle's resolution N.  ``keep_path`` stores the
    grid values Y_0, ..., Y_N with shape (samples, N + 1, M).
    """
    kind = SchemeKind(kind)
    kind.check_applicable(model)
    grid = _check_bundle(model, bundle)

    if kind is SchemeKind.INTEGRATED_COUNTERPART:
        counterpart, _ = integrated_counterpart_path(model, bundle, conv, keep_path=keep_path)
        return counterpart
    if kind is SchemeKind.EXACT_LINEAR_ADDITIVE:
        if keep_path:
            raise InvalidArgument("exact sampling produces terminal values only")
        sample = exact_linear_additive_sample(model, bundle, conv)
        return SchemeRun(kind, grid.N, sample.exact)

    factors = _step_factors(model, kind, grid.h)
    y = _initial_block(model, bundle)
    path = np.empty((bundle.samples, grid.N + 1, model.modes)) if keep_path else None
    if path is not None:
        path[:, 0] = y
    for n in range(grid.N):
        y = factors * _frozen_step(model, y, bundle.increments[:, :, n], grid.h)
        if path is not None:
            path[:, n + 1] = y
    return SchemeRun(kind, grid.N, y, path)


def integrated_counterpart_path(
    model: ModelSpec,
    bundle: NoiseBundle,
    conv: npt.NDArray[np.float64] | None,
    base_kind: SchemeKind | str = SchemeKind.EXPONENTIAL_EULER,
    keep_path: bool = False,
) -> tuple[SchemeRun, SchemeRun]:
    """Integrated counterpart Y-bar alongside the Euler scheme that freezes its coefficients.

    Y-bar_{n+1} = e^{hA} Y-bar_n + D_h F(Y_n) + B(Y_n) I_n, where I_n are the
    per-step stochastic convolutions coupled to the bundle.  Returns
    (counterpart run, scheme run).
    """
    base_kind = SchemeKind(base_kind)
    grid = _check_bundle(model, bundle)
    _check_convolution(bundle, conv)

    scheme_factors = _step_factors(model, base_kind, grid.h)
    semigroup = semigroup_factors(model.operator, grid.h)
    phi = phi_factors(model.operator, grid.h)

    y = _initial_block(model, bundle)
    y_bar = y.copy()
    path = np.empty((bundle.samples, grid.N + 1, model.modes)) if keep_path else None
    if path is not None:
        path[:, 0] = y_bar
    for n in range(grid.N):
        y_bar = semigroup * y_bar + diffusion_apply(model, y, conv[:, :, n])
        if model.drift_kind is not DriftKind.ZERO:
            y_bar = y_bar + phi * drift_eval(model, y)
        y = scheme_factors * _frozen_step(model, y, bundle.increments[:, :, n], grid.h)
        if path is not None:
            path[:, n + 1] = y_bar
    return (
        SchemeRun(SchemeKind.INTEGRATED_COUNTERPART, grid.N, y_bar, path),
        SchemeRun(base_kind, grid.N, y),
    )


def exact_linear_additive_sample(
    model: ModelSpec, bundle: NoiseBundle, conv: npt.NDArray[np.float64] | None
) -> ExactLinearSample:
    """Coupled X, Y_1 (exponential Euler) and Y_2 (linear-implicit Euler) at time T.

    All three are deterministic-weighted sums over the same driving path:
    X sums the exact per-step convolutions, the schemes sum the raw increments.
    """
    SchemeKind.EXACT_LINEAR_ADDITIVE.check_applicable(model)
    grid = _check_bundle(model, bundle)
    _check_convolution(bundle, conv)

    lam = model.operator.eigenvalues[:, None]
    mu = model.diffusion.mu
    remaining = (grid.N - np.arange(grid.N))[None, :]  # (T - t_n) / h
    exact_weights = np.exp(lam * grid.h * (remaining - 1))
    exp_weights = np.exp(lam * grid.h * remaining)
    impl_weights = np.exp(-remaining * np.log1p(-grid.h * lam))

    initial = model.initial
    exact = semigroup_factors(model.operator, grid.T) * initial + mu * np.sum(
        exact_weights * conv, axis=-1
    )
    exponential = semigroup_factors(model.operator, grid.T) * initial + mu * np.sum(
        exp_weights * bundle.increments, axis=-1
    )
    implicit = np.exp(-grid.N * np.log1p(-grid.h * model.operator.eigenvalues)) * initial + mu * np.sum(
        impl_weights * bundle.increments, axis=-1
    )
    return ExactLinearSample(exact, exponential, implicit)
