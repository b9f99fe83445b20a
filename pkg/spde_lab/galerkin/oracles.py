"""Closed-form Gaussian quantities for the linear additive-noise model.

For lambda_b = -|lambda|, B b = mu b and h = T / K the mode-b coordinates of

    X   = int_0^T e^{(T - s)A} B dW_s
    Y_1 = int_0^T e^{(T - [s]_h)A} B dW_s
    Y_2 = int_0^T (I - hA)^{-(T - [s]_h)/h} B dW_s

are centered Gaussians whose variances are geometric sums.  All functions
accept scalars or numpy arrays for lambda and mu.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import StrEnum
import logging
import math

import numpy as np
import numpy.typing as npt

from .const import CONDITIONAL_SERIES_THRESHOLD, GEOMETRIC_SERIES_THRESHOLD
from .errors import InvalidArgument
from .spectral import step_count

_LOGGER = logging.getLogger(__name__)

ArrayOrFloat = float | npt.NDArray[np.float64]


class Provenance(StrEnum):
    """Which process a variance sequence belongs to."""

    EXACT_X = "exact"
    EXP_EULER_Y1 = "exponential"
    IMPL_EULER_Y2 = "linear-implicit"


@dataclass(frozen=True, eq=False)
class ModeVariances:
    """Per-mode variances of a centered Gaussian with independent coordinates."""

    variances: npt.NDArray[np.float64]
    provenance: Provenance

    def __post_init__(self) -> None:
        variances = np.array(self.variances, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(variances)) or np.any(variances < 0):
            raise InvalidArgument("variances must be finite and nonnegative")
        variances.setflags(write=False)
        object.__setattr__(self, "variances", variances)
        object.__setattr__(self, "provenance", Provenance(self.provenance))


def _magnitude(lam: ArrayOrFloat) -> npt.NDArray[np.float64]:
    lam = np.asarray(lam, dtype=np.float64)
    if np.any(lam >= 0) or not np.all(np.isfinite(lam)):
        raise InvalidArgument("lambda: must be finite and strictly negative")
    return -lam


def _result(value: npt.NDArray[np.float64]) -> ArrayOrFloat:
    return float(value) if np.ndim(value) == 0 else value


def _positive_part(x: float) -> float:
    return max(x, 0.0)


def _negative_part(x: float) -> float:
    return max(-x, 0.0)


def var_exact_mode(lam: ArrayOrFloat, mu: ArrayOrFloat, T: float) -> ArrayOrFloat:
    """Var<b, X> = mu^2 (1 - e^{-2|lambda|T}) / (2|lambda|)."""
    if T <= 0:
        raise InvalidArgument(f"T: must be positive, got {T}")
    a = _magnitude(lam)
    mu = np.asarray(mu, dtype=np.float64)
    return _result(mu**2 * -np.expm1(-2.0 * a * T) / (2.0 * a))


def _direct_geometric(ratio: npt.NDArray[np.float64], count: int) -> npt.NDArray[np.float64]:
    """sum_{k=1}^{count} ratio^k, term by term with compensated summation."""
    flat = np.atleast_1d(ratio)
    k = np.arange(1, count + 1)
    sums = np.array([math.fsum(np.exp(k * math.log(q))) for q in flat])
    return sums.reshape(np.shape(ratio))


def var_exp_euler_mode(lam: ArrayOrFloat, mu: ArrayOrFloat, T: float, h: float) -> ArrayOrFloat:
    """Var<b, Y_1> = mu^2 h sum_{k=1}^{T/h} e^{-2|lambda| k h}."""
    count = step_count(T, h)
    a = _magnitude(lam)
    mu = np.asarray(mu, dtype=np.float64)
    x = 2.0 * a * h
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        closed = h * -np.expm1(-count * x) / np.expm1(x)
    small = np.atleast_1d(a * h < GEOMETRIC_SERIES_THRESHOLD)
    if np.any(small):
        closed = np.where(a * h < GEOMETRIC_SERIES_THRESHOLD, h * _direct_geometric(np.exp(-x), count), closed)
    return _result(mu**2 * closed)


def var_impl_euler_mode(lam: ArrayOrFloat, mu: ArrayOrFloat, T: float, h: float) -> ArrayOrFloat:
    """Var<b, Y_2> = mu^2 [1 - (1 + h|lambda|)^{-2T/h}] / (|lambda| (2 + h|lambda|))."""
    count = step_count(T, h)
    a = _magnitude(lam)
    mu = np.asarray(mu, dtype=np.float64)
    x = a * h
    closed = -np.expm1(-2.0 * count * np.log1p(x)) / (a * (2.0 + x))
    if np.any(np.atleast_1d(x < GEOMETRIC_SERIES_THRESHOLD)):
        direct = h * _direct_geometric(np.exp(-2.0 * np.log1p(x)), count)
        closed = np.where(x < GEOMETRIC_SERIES_THRESHOLD, direct, closed)
    return _result(mu**2 * closed)


def strong_sq_error_exp_euler_mode(
    lam: ArrayOrFloat, mu: ArrayOrFloat, T: float, h: float
) -> ArrayOrFloat:
    """E|<b, X> - <b, Y_1>|^2 for X and Y_1 driven by the same Wiener path."""
    count = step_count(T, h)
    a = _magnitude(lam)
    mu = np.asarray(mu, dtype=np.float64)
    x = a * h
    # int_0^h (e^{-a(h - u)} - e^{-a h})^2 du
    per_step = (
        -np.expm1(-2.0 * x) / (2.0 * a)
        + 2.0 * np.exp(-x) * np.expm1(-x) / a
        + h * np.exp(-2.0 * x)
    )
    series = h * x**2 * (1.0 / 3.0 + x / 4.0) * np.exp(-2.0 * x)
    per_step = np.where(x < CONDITIONAL_SERIES_THRESHOLD, series, per_step)
    # sum_{k<N} e^{-2 a k h}
    with np.errstate(divide="ignore", invalid="ignore"):
        weights = np.expm1(-2.0 * count * x) / np.expm1(-2.0 * x)
    weights = np.where(2.0 * x < GEOMETRIC_SERIES_THRESHOLD, float(count), weights)
    return _result(mu**2 * per_step * weights)


def gap_lower_bound_exp(lam: ArrayOrFloat, mu: ArrayOrFloat, T: float, h: float) -> ArrayOrFloat:
    """mu^2 (1 - e^{-2|lambda|T}) h / (4 e^{|lambda|h})."""
    a = _magnitude(lam)
    mu = np.asarray(mu, dtype=np.float64)
    return _result(mu**2 * -np.expm1(-2.0 * a * T) * h / (4.0 * np.exp(a * h)))


def gap_lower_bound_impl(lam: ArrayOrFloat, mu: ArrayOrFloat, T: float, h: float) -> ArrayOrFloat:
    """mu^2 (1 - e^{-2|lambda|T}) h / (4 (1 + h|lambda|)).

    Dominates gap_lower_bound_exp since 1 + x <= e^x.
    """
    a = _magnitude(lam)
    mu = np.asarray(mu, dtype=np.float64)
    bound = mu**2 * -np.expm1(-2.0 * a * T) * h / (4.0 * (1.0 + a * h))
    if np.any(bound < gap_lower_bound_exp(lam, mu, T, h) * (1.0 - 1e-12)):
        raise ArithmeticError("implicit gap bound fell below the exponential one")
    return _result(bound)


def mode_variances(
    lam: npt.ArrayLike, mu: npt.ArrayLike, T: float, h: float, provenance: Provenance | str
) -> ModeVariances:
    """Variance sequence of X, Y_1 or Y_2 for whole eigenvalue sequences."""
    provenance = Provenance(provenance)
    lam = np.asarray(lam, dtype=np.float64)
    mu = np.broadcast_to(np.asarray(mu, dtype=np.float64), lam.shape)
    if provenance is Provenance.EXACT_X:
        variances = var_exact_mode(lam, mu, T)
    elif provenance is Provenance.EXP_EULER_Y1:
        variances = var_exp_euler_mode(lam, mu, T, h)
    else:
        variances = var_impl_euler_mode(lam, mu, T, h)
    return ModeVariances(np.atleast_1d(variances), provenance)


def expected_sq_norm(v: ModeVariances) -> float:
    """E||Z||^2 = sum of the variances."""
    return math.fsum(v.variances)


def exp_functional(v: ModeVariances) -> float:
    """E[exp(-||Z||^2)] = prod (1 + 2 sigma_i^2)^{-1/2}, evaluated in log space."""
    return math.exp(-0.5 * math.fsum(np.log1p(2.0 * v.variances)))


def weak_gap_lower_bound_general(ex2: float, ey2: float) -> float:
    """(E||X||^2 - E||Y||^2) e^{-6 E||X||^2}."""
    if not ex2 >= ey2 >= 0:
        raise InvalidArgument(f"need EX2 >= EY2 >= 0, got EX2={ex2}, EY2={ey2}")
    return (ex2 - ey2) * math.exp(-6.0 * ex2)


def _log_concrete_prefactor(c: float, rho: float, delta: float, T: float, h: float, sharp: bool) -> float:
    if c <= 0 or rho <= 0:
        raise InvalidArgument(f"c and rho must be positive, got c={c}, rho={rho}")
    step_count(T, h)
    s = 1.0 / rho + 2.0 * delta
    if s >= 1.0:
        _LOGGER.warning(
            "1/rho + 2 delta = %s >= 1: the h exponent is not positive, bound does not decay", s
        )
    # The proof carries 1 - e^{-1 - (1/rho + 2 delta)^-} before relaxing it to 1 - e^{-1}
    tail = -1.0 - _negative_part(s) if sharp else -1.0
    log_numerator = (
        math.log(-math.expm1(-2.0 * c * T))
        + math.log(-math.expm1(tail))
        + _positive_part(s) * math.log(T)
        + 2.0 * delta * math.log(c)
        + (1.0 - _positive_part(s)) * math.log(h)
    )
    log_denominator = (
        (1.0 + rho * _negative_part(delta)) * math.log(4.0)
        + 2.0**rho * math.e * c * T
        + math.log(rho + _negative_part(1.0 + 2.0 * rho * delta))
    )
    return log_numerator - log_denominator


def concrete_gap_lower_bound(
    c: float, rho: float, delta: float, T: float, h: float, sharp: bool = False
) -> float:
    """Lower bound on E||X||^2 - E||Y_i||^2 for lambda_n = -c n^rho, mu_n = |lambda_n|^delta."""
    return math.exp(_log_concrete_prefactor(c, rho, delta, T, h, sharp))


def weak_error_lower_bound_concrete(
    c: float, rho: float, delta: float, T: float, h: float, ex2: float, sharp: bool = False
) -> float:
    """Lower bound on E[phi(Y_i)] - E[phi(X)] for phi(v) = exp(-||v||^2)."""
    return math.exp(_log_concrete_prefactor(c, rho, delta, T, h, sharp) - 6.0 * ex2)


def _log_laplacian_prefactor(delta: float, T: float, h: float) -> float:
    step_count(T, h)
    log_numerator = (
        math.log(-math.expm1(-T))
        + math.log(-math.expm1(-1.0))
        + _positive_part(0.5 + 2.0 * delta) * math.log(T)
        + 4.0 * delta * math.log(math.pi)
        + min(0.5 - 2.0 * delta, 1.0) * math.log(h)
    )
    log_denominator = (
        (1.0 + 2.0 * _negative_part(delta)) * math.log(4.0)
        + 12.0 * math.pi**2 * T
        + math.log(3.0 + 4.0 * _negative_part(delta))
    )
    return log_numerator - log_denominator


def laplacian_gap_lower_bound(delta: float, T: float, h: float) -> float:
    """Dirichlet-Laplacian (c = pi^2, rho = 2) variance-gap bound with h^{min{1/2 - 2 delta, 1}}."""
    return math.exp(_log_laplacian_prefactor(delta, T, h))


def laplacian_weak_error_lower_bound(delta: float, T: float, h: float, ex2: float) -> float:
    """Dirichlet-Laplacian weak-error bound for phi(v) = exp(-||v||^2)."""
    return math.exp(_log_laplacian_prefactor(delta, T, h) - 6.0 * ex2)
