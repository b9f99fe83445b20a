"""Diagonal spectral representation of the generator A.

Everything here acts on coefficient states, i.e. numpy arrays whose last axis
holds the coordinates of a state in the eigenbasis of A.  Leading axes are
batch axes (typically Monte Carlo samples), so every operation works on a
single state of shape ``(M,)`` as well as on a stack of shape ``(S, M)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import StrEnum
import logging
import math

import numpy as np
import numpy.typing as npt
from scipy.special import gammaln, logsumexp

from .const import CALE_MAX_TERMS, CALE_RELATIVE_CUTOFF, GRID_EXPONENT_RESIDUAL
from .errors import InvalidArgument

_LOGGER = logging.getLogger(__name__)

CoeffState = npt.NDArray[np.float64]

_LOG_CUTOFF = math.log(CALE_RELATIVE_CUTOFF)
_LOG_MAX_FLOAT = math.log(np.finfo(np.float64).max)


class BasisKind(StrEnum):
    """Orthonormal basis the eigenvalues belong to."""

    DIRICHLET_SINE = "dirichlet-sine"
    NEUMANN_COSINE = "neumann-cosine"
    ABSTRACT = "abstract"


@dataclass(frozen=True, eq=False)
class DiagonalOperator:
    """Generator A = diag(lambda_1, ..., lambda_M) with strictly negative spectrum."""

    eigenvalues: npt.NDArray[np.float64]
    basis_kind: BasisKind = BasisKind.ABSTRACT

    def __post_init__(self) -> None:
        eigenvalues = np.array(self.eigenvalues, dtype=np.float64).reshape(-1)
        if eigenvalues.size == 0:
            raise InvalidArgument("eigenvalues: at least one mode is required")
        if not np.all(np.isfinite(eigenvalues)):
            raise InvalidArgument("eigenvalues: must be finite")
        if np.any(eigenvalues >= 0):
            raise InvalidArgument("eigenvalues: every eigenvalue must be strictly negative")
        eigenvalues.setflags(write=False)
        object.__setattr__(self, "eigenvalues", eigenvalues)
        object.__setattr__(self, "basis_kind", BasisKind(self.basis_kind))

    @property
    def modes(self) -> int:
        """Spectral truncation M."""
        return int(self.eigenvalues.size)

    @property
    def magnitudes(self) -> npt.NDArray[np.float64]:
        """|lambda_i|."""
        return -self.eigenvalues


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid {0, h, ..., N h = T}."""

    T: float
    N: int
    h: float = field(init=False)

    def __post_init__(self) -> None:
        if not math.isfinite(self.T) or self.T <= 0:
            raise InvalidArgument(f"T: must be positive, got {self.T}")
        if int(self.N) != self.N or self.N < 1:
            raise InvalidArgument(f"N: must be a positive integer, got {self.N}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "h", self.T / self.N)

    @classmethod
    def from_step(cls, T: float, h: float) -> TimeGrid:
        """Grid with step h; T must be a positive integer multiple of h."""
        return cls(T, step_count(T, h))

    def times(self) -> npt.NDArray[np.float64]:
        """Grid points t_0, ..., t_N."""
        return np.arange(self.N + 1) * self.h


def step_count(T: float, h: float) -> int:
    """Return T / h, which must be a positive integer."""
    if not math.isfinite(h) or h <= 0:
        raise InvalidArgument(f"h: must be positive, got {h}")
    ratio = T / h
    count = round(ratio)
    if count < 1 or abs(ratio - count) > GRID_EXPONENT_RESIDUAL * max(1.0, ratio):
        raise InvalidArgument(f"T / h must be a positive integer, got T={T}, h={h}")
    return int(count)


def _grid_index(t: float, h: float) -> int:
    if not math.isfinite(t):
        raise InvalidArgument(f"t: must be finite, got {t}")
    if not math.isfinite(h) or h <= 0:
        raise InvalidArgument(f"h: must be positive, got {h}")
    k = math.floor(t / h)
    # t / h can land one ulp on the wrong side of an integer
    if (k + 1) * h <= t:
        k += 1
    elif k * h > t:
        k -= 1
    return k


def floor_grid(t: float, h: float) -> float:
    """Largest integer multiple of h that is <= t."""
    return _grid_index(t, h) * h


def ceil_grid(t: float, h: float) -> float:
    """Smallest integer multiple of h that is >= t."""
    k = _grid_index(t, h)
    if k * h == t:
        return t
    return (k + 1) * h


def as_state(op: DiagonalOperator, x: npt.ArrayLike, name: str = "x") -> CoeffState:
    """Validate x against op and return it as a float array."""
    state = np.asarray(x, dtype=np.float64)
    if state.ndim == 0 or state.shape[-1] != op.modes:
        raise InvalidArgument(
            f"{name}: expected {op.modes} coefficients, got shape {state.shape}"
        )
    if not np.all(np.isfinite(state)):
        raise InvalidArgument(f"{name}: coefficients must be finite")
    return state


def semigroup_factors(op: DiagonalOperator, t: float) -> npt.NDArray[np.float64]:
    """Diagonal of e^{tA}."""
    if not math.isfinite(t) or t < 0:
        raise InvalidArgument(f"t: the semigroup is forward-only, got t={t}")
    return np.exp(op.eigenvalues * t)


def semigroup_apply(op: DiagonalOperator, t: float, x: npt.ArrayLike) -> CoeffState:
    """e^{tA} x."""
    return semigroup_factors(op, t) * as_state(op, x)


def resolvent_factors(op: DiagonalOperator, h: float) -> npt.NDArray[np.float64]:
    """Diagonal of (I - hA)^{-1}; every entry lies in (0, 1)."""
    if not math.isfinite(h) or h <= 0:
        raise InvalidArgument(f"h: must be positive, got {h}")
    return 1.0 / (1.0 - h * op.eigenvalues)


def resolvent_apply(op: DiagonalOperator, h: float, x: npt.ArrayLike) -> CoeffState:
    """(I - hA)^{-1} x."""
    return resolvent_factors(op, h) * as_state(op, x)


def exponential_family_factors(
    op: DiagonalOperator, t1: float, t2: float
) -> npt.NDArray[np.float64]:
    """Diagonal of the exponential Euler family S_{t1,t2} = e^{(t2 - t1)A}."""
    if not t1 < t2:
        raise InvalidArgument(f"t1 < t2 required, got t1={t1}, t2={t2}")
    return semigroup_factors(op, t2 - t1)


def implicit_family_factors(
    op: DiagonalOperator, h: float, t1: float, t2: float
) -> npt.NDArray[np.float64]:
    """Diagonal of the linear-implicit family S^h_{t1,t2}.

    S^h_{t1,t2} = (I - (t1 - [t1]_h)A) (I - (t2 - [t2]_h)A)^{-1} (I - hA)^{-m}
    with m = ([t2]_h - [t1]_h) / h computed as an exact integer.
    """
    if not math.isfinite(t1) or t1 < 0:
        raise InvalidArgument(f"t1: the family starts at a nonnegative time, got t1={t1}")
    if not t1 < t2:
        raise InvalidArgument(f"t1 < t2 required, got t1={t1}, t2={t2}")
    k1 = _grid_index(t1, h)
    k2 = _grid_index(t2, h)
    lag1 = t1 - k1 * h
    lag2 = t2 - k2 * h
    exponent = (k2 * h - k1 * h) / h
    m = round(exponent)
    if abs(exponent - m) >= GRID_EXPONENT_RESIDUAL:
        raise InvalidArgument(f"non-integer resolvent exponent {exponent}")
    lam = op.eigenvalues
    return (1.0 - lag1 * lam) / (1.0 - lag2 * lam) * np.exp(-m * np.log1p(-h * lam))


def implicit_family_apply(
    op: DiagonalOperator, h: float, t1: float, t2: float, x: npt.ArrayLike
) -> CoeffState:
    """S^h_{t1,t2} x."""
    return implicit_family_factors(op, h, t1, t2) * as_state(op, x)


def hr_norm(op: DiagonalOperator, r: float, x: npt.ArrayLike) -> float | npt.NDArray[np.float64]:
    """Norm in the interpolation space H_r: sqrt(sum |lambda_i|^{2r} x_i^2)."""
    state = as_state(op, x)
    weights = op.magnitudes ** (2.0 * r)
    norm = np.sqrt(np.sum(weights * state**2, axis=-1))
    if norm.ndim == 0:
        return float(norm)
    return norm


def calE(r: float, x: float) -> float:
    """[sum_n x^{2n} Gamma(r)^n / Gamma(n r + 1)]^{1/2} for r in (0, 1].

    The series is summed in log space; the result is ``inf`` only when the
    square root itself exceeds the double range.
    """
    if not 0 < r <= 1:
        raise InvalidArgument(f"r: must lie in (0, 1], got {r}")
    if not math.isfinite(x) or x < 0:
        raise InvalidArgument(f"x: must be a nonnegative real, got {x}")
    if x == 0:
        return 1.0

    log_ratio = 2.0 * math.log(x) + float(gammaln(r))
    log_terms = [0.0]
    log_total = 0.0
    for n in range(1, CALE_MAX_TERMS):
        log_term = n * log_ratio - float(gammaln(n * r + 1.0))
        log_terms.append(log_term)
        log_total = float(np.logaddexp(log_total, log_term))
        # Terms grow before they decay; only stop on the decaying side
        if log_term <= log_terms[-2] and log_term < _LOG_CUTOFF + log_total:
            break
    else:
        _LOGGER.warning("calE(%s, %s) hit the %s term cap", r, x, CALE_MAX_TERMS)
    half = 0.5 * float(logsumexp(log_terms))
    if half >= _LOG_MAX_FLOAT:
        return math.inf
    return math.exp(half)
