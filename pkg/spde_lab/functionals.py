"""Test functionals phi applied to terminal coefficient states."""
from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from .galerkin.errors import InvalidArgument
from .galerkin.oracles import ModeVariances, exp_functional, expected_sq_norm


@dataclass(frozen=True, kw_only=True)
class FunctionalDescription:
    """Describes a test functional and its Gaussian mean, when known."""

    key: str
    name: str
    value_fn: Callable[[npt.NDArray[np.float64]], npt.NDArray[np.float64]]
    gaussian_mean_fn: Callable[[ModeVariances], float]
    bounded: bool = True


def _sq_norm(y: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    return np.sum(y**2, axis=-1)


FUNCTIONALS: tuple[FunctionalDescription, ...] = (
    FunctionalDescription(
        key="exp_neg_sq_norm",
        name="exp(-||v||^2)",
        value_fn=lambda y: np.exp(-_sq_norm(y)),
        gaussian_mean_fn=exp_functional,
    ),
    # Unbounded, so outside the smooth bounded test-function class; kept for oracle cross-checks
    FunctionalDescription(
        key="sq_norm",
        name="||v||^2",
        value_fn=_sq_norm,
        gaussian_mean_fn=expected_sq_norm,
        bounded=False,
    ),
    FunctionalDescription(
        key="first_mode_sq",
        name="<b_1, v>^2",
        value_fn=lambda y: y[..., 0] ** 2,
        gaussian_mean_fn=lambda v: float(v.variances[0]),
        bounded=False,
    ),
)


def test_functional_registry() -> dict[str, FunctionalDescription]:
    """Named test functionals."""
    return {description.key: description for description in FUNCTIONALS}


test_functional_registry.__test__ = False


def get_functional(key: str) -> FunctionalDescription:
    """Look up a functional by key."""
    registry = test_functional_registry()
    if key not in registry:
        raise InvalidArgument(f"unknown functional {key!r}, expected one of {sorted(registry)}")
    return registry[key]
