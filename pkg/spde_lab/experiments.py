"""Monte Carlo error estimation, rate fits and deterministic bound sweeps."""
from __future__ import annotations

from collections.abc import Callable, Mapping, Sequence
from dataclasses import asdict, dataclass, field, replace
import logging
import math
from typing import Any

import numpy as np
import numpy.typing as npt

from . import MonteCarloCoordinator, SpdeLabError
from .const import (
    CONVOLUTION_SEED_SALT,
    DEFAULT_MOMENT,
    DEFAULT_RHO_NORM,
    DEFAULT_THETA,
    MIN_REFERENCE_RATIO,
    STANDARD_ERROR_BAND,
    TAIL_RELATIVE_TOLERANCE,
)
from .functionals import FunctionalDescription
from .galerkin.errors import InvalidArgument
from .galerkin.models import DriftKind, ModelSpec
from .galerkin.noise import (
    NoiseBundle,
    coarsen,
    coarsen_convolution,
    convolution_increments,
    is_power_of_two,
    sample_increments,
)
from .galerkin.oracles import (
    Provenance,
    concrete_gap_lower_bound,
    exp_functional,
    expected_sq_norm,
    laplacian_gap_lower_bound,
    laplacian_weak_error_lower_bound,
    mode_variances,
    weak_error_lower_bound_concrete,
)
from .galerkin.schemes import (
    SchemeKind,
    exact_linear_additive_sample,
    integrated_counterpart_path,
    simulate_path,
)
from .galerkin.spectral import (
    CoeffState,
    calE,
    exponential_family_factors,
    hr_norm,
    implicit_family_factors,
    step_count,
)

_LOGGER = logging.getLogger(__name__)

KIND_SIMULATE = "simulate"
KIND_WEAK = "weak-rate"
KIND_STRONG = "strong-rate"
KIND_LOWER_BOUND = "lower-bound"
KIND_ORACLE = "oracle-check"
KIND_INTEGRATED = "integrated-distance"
KIND_PERTURBATION = "perturbation-check"


class AcceptanceFailed(SpdeLabError):
    """Error to indicate a statistical acceptance check did not hold."""


@dataclass(frozen=True)
class ErrorPoint:
    """One resolution of an error sweep.

    Monte Carlo points carry at least two samples; deterministic sweeps store
    ``samples=0``.  ``bound`` holds the closed-form bound the estimate is
    compared against, when there is one.
    """

    N: int
    h: float
    estimate: float
    std_error: float
    samples: int
    bound: float | None = None

    def __post_init__(self) -> None:
        if not self.std_error >= 0:
            raise InvalidArgument(f"std_error: must be nonnegative, got {self.std_error}")
        if self.samples < 0:
            raise InvalidArgument(f"samples: must be nonnegative, got {self.samples}")


@dataclass(frozen=True)
class RateFit:
    """Least-squares line through (log h, log error)."""

    order: float
    intercept: float
    r2: float
    residuals: tuple[float, ...] = ()


@dataclass(frozen=True)
class ExperimentReport:
    """Error points of one run plus the fitted convergence order."""

    kind: str
    points: tuple[ErrorPoint, ...]
    fitted_order: float = math.nan
    fit_intercept: float = math.nan
    fit_r2: float = math.nan
    residuals: tuple[float, ...] = ()
    config: Mapping[str, Any] = field(default_factory=dict)
    seed: int | None = None
    passed: bool | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "points", tuple(sorted(self.points, key=lambda p: p.N)))
        object.__setattr__(self, "residuals", tuple(self.residuals))

    def with_config(self, config: Mapping[str, Any], seed: int | None) -> ExperimentReport:
        """Copy of the report with the resolved configuration attached."""
        return replace(self, config=dict(config), seed=seed)

    def to_dict(self) -> dict[str, Any]:
        """Plain dict mirroring the report field for field."""
        data = asdict(self)
        data["points"] = [asdict(point) for point in self.points]
        data["residuals"] = list(self.residuals)
        data["config"] = dict(self.config)
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> ExperimentReport:
        """Inverse of to_dict."""
        return cls(
            kind=data["kind"],
            points=tuple(ErrorPoint(**point) for point in data["points"]),
            fitted_order=float(data["fitted_order"]),
            fit_intercept=float(data["fit_intercept"]),
            fit_r2=float(data["fit_r2"]),
            residuals=tuple(float(r) for r in data.get("residuals", ())),
            config=dict(data.get("config", {})),
            seed=data.get("seed"),
            passed=data.get("passed"),
        )


@dataclass(frozen=True)
class PerturbationResult:
    """Both sides of the initial-value perturbation inequality."""

    lhs: float
    std_error: float
    rhs: float
    distance: float
    drift_constant: float
    diffusion_constant: float
    worst_time: float
    samples: int

    @property
    def margin(self) -> float:
        """RHS + band * SE - LHS; nonnegative iff the check passes."""
        return self.rhs + STANDARD_ERROR_BAND * self.std_error - self.lhs

    @property
    def passed(self) -> bool:
        return self.margin >= 0


def fit_rate(points: Sequence[tuple[float, float]]) -> RateFit:
    """Fit log(error) = order * log(h) + intercept.

    Nonpositive or non-finite errors are dropped with a warning.
    """
    usable = []
    for h, error in points:
        if h > 0 and error > 0 and math.isfinite(error):
            usable.append((h, error))
        else:
            _LOGGER.warning("Excluding point h=%s error=%s from the rate fit", h, error)
    if len(usable) < 2:
        raise InvalidArgument(f"rate fit needs at least 2 usable points, got {len(usable)}")

    log_h = np.log([h for h, _ in usable])
    log_e = np.log([error for _, error in usable])
    order, intercept = np.polyfit(log_h, log_e, 1)
    residuals = log_e - (order * log_h + intercept)
    total = float(np.sum((log_e - log_e.mean()) ** 2))
    r2 = 1.0 - float(np.sum(residuals**2)) / total if total > 0 else 1.0
    return RateFit(float(order), float(intercept), min(max(r2, 0.0), 1.0), tuple(residuals.tolist()))


def _report(
    kind: str,
    points: list[ErrorPoint],
    passed: bool | None = None,
    value: Callable[[ErrorPoint], float] = lambda p: abs(p.estimate),
) -> ExperimentReport:
    candidates = [(p.h, value(p)) for p in points]
    if sum(1 for _, error in candidates if error > 0 and math.isfinite(error)) < 2:
        _LOGGER.warning("%s: fewer than 2 nonzero error points, no rate fitted", kind)
        return ExperimentReport(kind, tuple(points), passed=passed)
    fit = fit_rate(candidates)
    _LOGGER.info("%s: fitted order %.4f (r2 %.4f)", kind, fit.order, fit.r2)
    return ExperimentReport(
        kind,
        tuple(points),
        fitted_order=fit.order,
        fit_intercept=fit.intercept,
        fit_r2=fit.r2,
        residuals=fit.residuals,
        passed=passed,
    )


def _check_resolutions(n_list: Sequence[int], n_ref: int, reference: bool = True) -> list[int]:
    if not n_list:
        raise InvalidArgument("n_list: must not be empty")
    if not is_power_of_two(n_ref):
        raise InvalidArgument(f"N_ref: must be a power of two, got {n_ref}")
    resolutions = sorted(set(int(n) for n in n_list))
    for n in resolutions:
        if n < 1 or n_ref % n != 0:
            raise InvalidArgument(f"N={n} does not divide N_ref={n_ref}")
        if reference and n != n_ref and n_ref // n < MIN_REFERENCE_RATIO:
            _LOGGER.warning(
                "N_ref / N = %s < %s: reference is not much finer than N=%s",
                n_ref // n,
                MIN_REFERENCE_RATIO,
                n,
            )
    if reference and resolutions == [n_ref]:
        _LOGGER.warning("Only N = N_ref requested: the error is zero and no rate can be fitted")
    return resolutions


def _check_samples(samples: int) -> None:
    if samples < 2:
        raise InvalidArgument(f"samples: need at least 2, got {samples}")


def _convolution_seed(seed: int) -> int:
    return seed ^ CONVOLUTION_SEED_SALT


def _at_resolution(
    model: ModelSpec,
    fine: NoiseBundle,
    fine_conv: npt.NDArray[np.float64] | None,
    n: int,
) -> tuple[NoiseBundle, npt.NDArray[np.float64] | None]:
    factor = fine.N // n
    bundle = coarsen(fine, factor)
    if fine_conv is None:
        return bundle, None
    return bundle, coarsen_convolution(model.operator, fine_conv, fine.h, factor)


def _coupled_terminals(
    model: ModelSpec,
    kind: SchemeKind,
    resolutions: Sequence[int],
    n_ref: int,
    seed: int,
    chunk: range,
) -> dict[int, CoeffState]:
    """Terminal values at every resolution, all driven by one fine bundle per sample."""
    fine = sample_increments(model.modes, n_ref, model.T, seed, chunk)
    fine_conv = (
        convolution_increments(model.operator, fine, _convolution_seed(seed))
        if kind.requires_convolution
        else None
    )
    terminals = {}
    for n in {*resolutions, n_ref}:
        bundle, conv = _at_resolution(model, fine, fine_conv, n)
        terminals[n] = simulate_path(model, kind, bundle, conv).terminal
    return terminals


def _mean_and_error(values: npt.NDArray[np.float64]) -> tuple[float, float]:
    """Sample mean and its standard error along axis 0."""
    mean = float(np.mean(values))
    if values.shape[0] < 2:
        return mean, 0.0
    return mean, float(np.std(values, ddof=1) / math.sqrt(values.shape[0]))


def _root_mean_square(sq_norms: npt.NDArray[np.float64]) -> tuple[float, float]:
    """sqrt of the mean square and its delta-method standard error."""
    m2, m2_error = _mean_and_error(sq_norms)
    estimate = math.sqrt(max(m2, 0.0))
    if estimate == 0:
        return 0.0, 0.0
    return estimate, m2_error / (2.0 * estimate)


def _coordinator(coordinator: MonteCarloCoordinator | None) -> MonteCarloCoordinator:
    return coordinator if coordinator is not None else MonteCarloCoordinator()


def weak_rate(
    model: ModelSpec,
    kind: SchemeKind | str,
    functional: FunctionalDescription,
    n_list: Sequence[int],
    n_ref: int,
    samples: int,
    seed: int,
    coordinator: MonteCarloCoordinator | None = None,
) -> ExperimentReport:
    """Coupled-difference weak errors E[phi(Y^{N_ref}_T) - phi(Y^N_T)] for every N."""
    kind = SchemeKind(kind)
    kind.check_applicable(model)
    resolutions = _check_resolutions(n_list, n_ref)
    _check_samples(samples)

    def task(chunk: range) -> npt.NDArray[np.float64]:
        terminals = _coupled_terminals(model, kind, resolutions, n_ref, seed, chunk)
        reference = functional.value_fn(terminals[n_ref])
        return np.stack(
            [reference - functional.value_fn(terminals[n]) for n in resolutions], axis=-1
        )

    differences = _coordinator(coordinator).run(samples, task)
    points = []
    for column, n in enumerate(resolutions):
        estimate, std_error = _mean_and_error(differences[:, column])
        points.append(ErrorPoint(n, model.T / n, estimate, std_error, samples))
        _LOGGER.debug("Weak error N=%s: %.6e +- %.2e", n, estimate, std_error)
    return _report(KIND_WEAK, points)


def estimate_weak_error(
    model: ModelSpec,
    kind: SchemeKind | str,
    functional: FunctionalDescription,
    N: int,
    n_ref: int,
    samples: int,
    seed: int,
    coordinator: MonteCarloCoordinator | None = None,
) -> ErrorPoint:
    """Weak error at a single resolution N."""
    return weak_rate(model, kind, functional, [N], n_ref, samples, seed, coordinator).points[0]


def strong_rate(
    model: ModelSpec,
    kind: SchemeKind | str,
    n_list: Sequence[int],
    n_ref: int,
    samples: int,
    seed: int,
    coordinator: MonteCarloCoordinator | None = None,
) -> ExperimentReport:
    """Coupled strong errors (E||Y^{N_ref}_T - Y^N_T||^2)^{1/2} for every N."""
    kind = SchemeKind(kind)
    kind.check_applicable(model)
    resolutions = _check_resolutions(n_list, n_ref)
    _check_samples(samples)

    def task(chunk: range) -> npt.NDArray[np.float64]:
        terminals = _coupled_terminals(model, kind, resolutions, n_ref, seed, chunk)
        return np.stack(
            [np.sum((terminals[n_ref] - terminals[n]) ** 2, axis=-1) for n in resolutions],
            axis=-1,
        )

    sq_norms = _coordinator(coordinator).run(samples, task)
    points = []
    for column, n in enumerate(resolutions):
        estimate, std_error = _root_mean_square(sq_norms[:, column])
        points.append(ErrorPoint(n, model.T / n, estimate, std_error, samples))
        _LOGGER.debug("Strong error N=%s: %.6e +- %.2e", n, estimate, std_error)
    return _report(KIND_STRONG, points)


def estimate_strong_error(
    model: ModelSpec,
    kind: SchemeKind | str,
    N: int,
    n_ref: int,
    samples: int,
    seed: int,
    coordinator: MonteCarloCoordinator | None = None,
) -> ErrorPoint:
    """Strong error at a single resolution N."""
    return strong_rate(model, kind, [N], n_ref, samples, seed, coordinator).points[0]


def simulate(
    model: ModelSpec,
    kind: SchemeKind | str,
    functional: FunctionalDescription,
    n_list: Sequence[int],
    samples: int,
    seed: int,
    coordinator: MonteCarloCoordinator | None = None,
) -> ExperimentReport:
    """Monte Carlo mean of phi(Y^N_T) for every N, coupled through the finest N."""
    kind = SchemeKind(kind)
    kind.check_applicable(model)
    n_max = max(n_list) if n_list else 0
    resolutions = _check_resolutions(n_list, n_max, reference=False)
    _check_samples(samples)

    def task(chunk: range) -> npt.NDArray[np.float64]:
        terminals = _coupled_terminals(model, kind, resolutions, n_max, seed, chunk)
        return np.stack([functional.value_fn(terminals[n]) for n in resolutions], axis=-1)

    values = _coordinator(coordinator).run(samples, task)
    points = [
        ErrorPoint(n, model.T / n, *_mean_and_error(values[:, column]), samples)
        for column, n in enumerate(resolutions)
    ]
    return ExperimentReport(KIND_SIMULATE, tuple(points))


def integrated_distance(
    model: ModelSpec,
    n_list: Sequence[int],
    samples: int,
    seed: int,
    rho: float = DEFAULT_RHO_NORM,
    base_kind: SchemeKind | str = SchemeKind.EXPONENTIAL_EULER,
    coordinator: MonteCarloCoordinator | None = None,
) -> ExperimentReport:
    """(E||Y-bar^N_T - Y^N_T||^2_{H_{-rho}})^{1/2} for every N."""
    base_kind = SchemeKind(base_kind)
    n_max = max(n_list) if n_list else 0
    resolutions = _check_resolutions(n_list, n_max, reference=False)
    _check_samples(samples)

    def task(chunk: range) -> npt.NDArray[np.float64]:
        fine = sample_increments(model.modes, n_max, model.T, seed, chunk)
        fine_conv = convolution_increments(model.operator, fine, _convolution_seed(seed))
        columns = []
        for n in resolutions:
            bundle, conv = _at_resolution(model, fine, fine_conv, n)
            counterpart, scheme = integrated_counterpart_path(model, bundle, conv, base_kind)
            columns.append(
                np.atleast_1d(hr_norm(model.operator, -rho, counterpart.terminal - scheme.terminal))
                ** 2
            )
        return np.stack(columns, axis=-1)

    sq_norms = _coordinator(coordinator).run(samples, task)
    points = [
        ErrorPoint(n, model.T / n, *_root_mean_square(sq_norms[:, column]), samples)
        for column, n in enumerate(resolutions)
    ]
    return _report(KIND_INTEGRATED, points)


def _variance_tail(c: float, rho: float, delta: float, modes: int) -> float:
    """Integral bound on sum_{n > M} Var<b_n, X_T> <= sum mu_n^2 / (2|lambda_n|)."""
    exponent = rho * (2.0 * delta - 1.0)
    if exponent >= -1.0:
        return math.inf
    return c ** (2.0 * delta - 1.0) / 2.0 * modes ** (exponent + 1.0) / -(exponent + 1.0)


def lower_bound_sweep(
    c: float,
    rho: float,
    delta: float,
    T: float,
    modes: int,
    h_list: Sequence[float],
    scheme: int,
    weak: bool = False,
    sharp: bool = False,
    laplacian: bool = False,
) -> ExperimentReport:
    """Exact Gaussian gaps against their closed-form lower bounds, without sampling.

    ``scheme`` selects Y_1 (1, exponential Euler) or Y_2 (2, linear-implicit
    Euler).  With ``weak`` the gap is E[exp(-||Y||^2)] - E[exp(-||X||^2)],
    otherwise E||X||^2 - E||Y||^2.  ``laplacian`` uses the Dirichlet-Laplacian
    specialization of the bound and needs c = pi^2, rho = 2.
    """
    if scheme not in (1, 2):
        raise InvalidArgument(f"scheme: must be 1 or 2, got {scheme}")
    if modes < 1:
        raise InvalidArgument(f"modes: must be >= 1, got {modes}")
    if c <= 0 or rho <= 0:
        raise InvalidArgument(f"c and rho must be positive, got c={c}, rho={rho}")
    if laplacian and not (math.isclose(c, math.pi**2) and rho == 2):
        raise InvalidArgument("the Laplacian bound needs c = pi^2 and rho = 2")
    if not h_list:
        raise InvalidArgument("h_list: must not be empty")
    provenance = Provenance.EXP_EULER_Y1 if scheme == 1 else Provenance.IMPL_EULER_Y2

    magnitudes = c * np.arange(1, modes + 1, dtype=np.float64) ** rho
    lam = -magnitudes
    mu = magnitudes**delta
    tail = _variance_tail(c, rho, delta, modes)

    points = []
    passed = True
    for h in sorted(h_list, reverse=True):
        n = step_count(T, h)
        exact = mode_variances(lam, mu, T, h, Provenance.EXACT_X)
        scheme_variances = mode_variances(lam, mu, T, h, provenance)
        ex2 = expected_sq_norm(exact)
        variance_gap = math.fsum(exact.variances - scheme_variances.variances)
        if weak:
            gap = exp_functional(scheme_variances) - exp_functional(exact)
            if laplacian:
                bound = laplacian_weak_error_lower_bound(delta, T, h, ex2)
            else:
                bound = weak_error_lower_bound_concrete(c, rho, delta, T, h, ex2, sharp)
        else:
            gap = variance_gap
            if laplacian:
                bound = laplacian_gap_lower_bound(delta, T, h)
            else:
                bound = concrete_gap_lower_bound(c, rho, delta, T, h, sharp)

        if tail > TAIL_RELATIVE_TOLERANCE * variance_gap:
            _LOGGER.warning(
                "h=%s: variance tail beyond M=%s is about %.3e, %.2e of the gap; increase M",
                h,
                modes,
                tail,
                tail / variance_gap if variance_gap > 0 else math.inf,
            )
        if gap < bound:
            passed = False
            _LOGGER.error("h=%s: gap %.6e is below the lower bound %.6e", h, gap, bound)
        points.append(ErrorPoint(n, h, gap, 0.0, 0, bound=bound))
    return _report(KIND_LOWER_BOUND, points, passed=passed)


_PROVENANCE_BY_KIND = {
    SchemeKind.EXACT_LINEAR_ADDITIVE: Provenance.EXACT_X,
    SchemeKind.EXPONENTIAL_EULER: Provenance.EXP_EULER_Y1,
    SchemeKind.LINEAR_IMPLICIT_EULER: Provenance.IMPL_EULER_Y2,
}


def oracle_check(
    model: ModelSpec,
    kind: SchemeKind | str,
    functional: FunctionalDescription,
    n_list: Sequence[int],
    samples: int,
    seed: int,
    coordinator: MonteCarloCoordinator | None = None,
) -> ExperimentReport:
    """Monte Carlo E[phi(Z)] minus its Gaussian closed form, per N.

    Z is X (exact-linear), Y_1 (exponential) or Y_2 (linear-implicit) of the
    diagonal additive model, sampled exactly as weighted sums of one path.
    Passes iff every difference lies within the standard-error band.
    """
    kind = SchemeKind(kind)
    if kind not in _PROVENANCE_BY_KIND:
        raise InvalidArgument(f"{kind} has no closed-form oracle")
    SchemeKind.EXACT_LINEAR_ADDITIVE.check_applicable(model)
    if np.any(model.initial != 0):
        raise InvalidArgument("the Gaussian oracles need a zero initial condition")
    _check_samples(samples)
    resolutions = sorted(set(int(n) for n in n_list))
    if not resolutions or resolutions[0] < 1:
        raise InvalidArgument("n_list: must hold positive step counts")
    provenance = _PROVENANCE_BY_KIND[kind]
    coordinator = _coordinator(coordinator)

    points = []
    passed = True
    for n in resolutions:
        h = model.T / n

        def task(chunk: range, n: int = n) -> npt.NDArray[np.float64]:
            bundle = sample_increments(model.modes, n, model.T, seed, chunk)
            conv = convolution_increments(model.operator, bundle, _convolution_seed(seed))
            sample = exact_linear_additive_sample(model, bundle, conv)
            value = {
                Provenance.EXACT_X: sample.exact,
                Provenance.EXP_EULER_Y1: sample.exponential,
                Provenance.IMPL_EULER_Y2: sample.implicit,
            }[provenance]
            return functional.value_fn(value)

        if not is_power_of_two(n):
            raise InvalidArgument(f"N={n}: must be a power of two")
        mean, std_error = _mean_and_error(coordinator.run(samples, task))
        variances = mode_variances(
            model.operator.eigenvalues, model.diffusion.mu, model.T, h, provenance
        )
        oracle = functional.gaussian_mean_fn(variances)
        difference = mean - oracle
        if abs(difference) > STANDARD_ERROR_BAND * std_error:
            passed = False
            _LOGGER.error(
                "N=%s %s: MC %.8e vs oracle %.8e, difference %.2e > %s SE (%.2e)",
                n,
                provenance,
                mean,
                oracle,
                difference,
                STANDARD_ERROR_BAND,
                std_error,
            )
        points.append(ErrorPoint(n, h, difference, std_error, samples))
    return ExperimentReport(KIND_ORACLE, tuple(points), passed=passed)


def _family_diagonal(model: ModelSpec, kind: SchemeKind, h: float, tau: float) -> npt.NDArray[np.float64]:
    if kind is SchemeKind.LINEAR_IMPLICIT_EULER:
        return implicit_family_factors(model.operator, h, 0.0, tau)
    return exponential_family_factors(model.operator, 0.0, tau)


def perturbation_constants(
    model: ModelSpec, kind: SchemeKind | str, N: int, theta: float = DEFAULT_THETA
) -> tuple[float, float]:
    """Drift and diffusion constants (C_F, C_B) of the perturbation bound.

    C_F = L_F T^theta.  C_B = |kappa| sqrt(2) sup_tau tau^{theta/2} ||S_{0,tau}||_HS
    over the Galerkin modes, which bounds the Hilbert-Schmidt norm of
    S_{0,tau}(B(x) - B(y)) for pointwise multiplication against |b_k| <= sqrt(2).
    """
    kind = SchemeKind(kind)
    if model.drift_lipschitz is None:
        raise InvalidArgument("custom drift needs a declared Lipschitz constant")
    if not 0 < theta < 1:
        raise InvalidArgument(f"theta: must lie in (0, 1), got {theta}")
    T = model.T
    drift_constant = model.drift_lipschitz * T**theta
    if model.is_additive or model.diffusion.kappa == 0:
        return drift_constant, 0.0

    h = T / N
    taus = np.union1d(np.geomspace(T * 1e-9, T, 2048), np.linspace(0.0, T, 64 * N + 1)[1:])
    best = 0.0
    for tau in taus:
        diagonal = _family_diagonal(model, kind, h, float(tau))
        best = max(best, tau ** (theta / 2.0) * math.sqrt(math.fsum(diagonal**2)))
    return drift_constant, abs(model.diffusion.kappa) * math.sqrt(2.0) * best


def perturbation_check(
    model: ModelSpec,
    kind: SchemeKind | str,
    N: int,
    samples: int,
    xi_a: npt.ArrayLike,
    xi_b: npt.ArrayLike,
    seed: int,
    theta: float = DEFAULT_THETA,
    p: float = DEFAULT_MOMENT,
    coordinator: MonteCarloCoordinator | None = None,
) -> PerturbationResult:
    """sup_t ||Y^a_t - Y^b_t||_{L^2(P;H)} against the closed-form perturbation bound.

    Both initial conditions are driven by the same noise.
    """
    kind = SchemeKind(kind)
    if kind not in (SchemeKind.EXPONENTIAL_EULER, SchemeKind.LINEAR_IMPLICIT_EULER):
        raise InvalidArgument(f"{kind}: perturbation check needs an Euler scheme")
    if p != 2:
        raise InvalidArgument(f"p: only p = 2 is supported, got {p}")
    if model.drift_kind is DriftKind.CUSTOM and model.drift_lipschitz is None:
        raise InvalidArgument("custom drift needs a declared Lipschitz constant")
    _check_samples(samples)
    if not is_power_of_two(N):
        raise InvalidArgument(f"N: must be a power of two, got {N}")
    model_a = replace(model, initial=xi_a)
    model_b = replace(model, initial=xi_b)
    distance = float(np.linalg.norm(model_a.initial - model_b.initial))

    def task(chunk: range) -> npt.NDArray[np.float64]:
        bundle = sample_increments(model.modes, N, model.T, seed, chunk)
        path_a = simulate_path(model_a, kind, bundle, keep_path=True).path
        path_b = simulate_path(model_b, kind, bundle, keep_path=True).path
        return np.sum((path_a - path_b) ** 2, axis=-1)

    sq_norms = _coordinator(coordinator).run(samples, task)
    second_moments = np.mean(sq_norms, axis=0)
    worst = int(np.argmax(second_moments))
    lhs, std_error = _root_mean_square(sq_norms[:, worst])

    drift_constant, diffusion_constant = perturbation_constants(model, kind, N, theta)
    T = model.T
    argument = drift_constant * math.sqrt(2.0) * T ** (1.0 - theta) / math.sqrt(
        1.0 - theta
    ) + diffusion_constant * math.sqrt(p * (p - 1.0) * T ** (1.0 - theta))
    # sup_t ||S_t|| = 1 for a generator with negative spectrum
    rhs = math.sqrt(2.0) * distance * calE(1.0 - theta, argument)
    result = PerturbationResult(
        lhs=lhs,
        std_error=std_error,
        rhs=rhs,
        distance=distance,
        drift_constant=drift_constant,
        diffusion_constant=diffusion_constant,
        worst_time=worst * T / N,
        samples=samples,
    )
    _LOGGER.info(
        "Perturbation ||xi_a - xi_b||=%s: LHS %.6e +- %.2e, RHS %.6e", distance, lhs, std_error, rhs
    )
    return result


def perturbation_sweep(
    model: ModelSpec,
    kind: SchemeKind | str,
    N: int,
    samples: int,
    distances: Sequence[float],
    seeds: Sequence[int],
    mode: int = 1,
    theta: float = DEFAULT_THETA,
    coordinator: MonteCarloCoordinator | None = None,
) -> ExperimentReport:
    """Perturbation checks for xi_b = xi_a + d b_mode over distances and seeds."""
    if not 1 <= mode <= model.modes:
        raise InvalidArgument(f"mode: must lie in 1..{model.modes}, got {mode}")
    if not distances or not seeds:
        raise InvalidArgument("perturbation sweep needs at least one distance and one seed")
    direction = np.zeros(model.modes)
    direction[mode - 1] = 1.0
    points = []
    passed = True
    for distance in distances:
        for seed in seeds:
            result = perturbation_check(
                model,
                kind,
                N,
                samples,
                model.initial,
                model.initial + distance * direction,
                seed,
                theta=theta,
                coordinator=coordinator,
            )
            if not result.passed:
                passed = False
                _LOGGER.error(
                    "Perturbation bound violated for d=%s seed=%s: margin %.3e",
                    distance,
                    seed,
                    result.margin,
                )
            points.append(
                ErrorPoint(N, model.T / N, result.lhs, result.std_error, samples, bound=result.rhs)
            )
    return ExperimentReport(KIND_PERTURBATION, tuple(points), passed=passed)
