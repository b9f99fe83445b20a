"""Run configuration for spde_lab: INI sections validated by voluptuous schemas."""
from __future__ import annotations

from collections.abc import Callable, Iterable, Mapping, Sequence
import configparser
from dataclasses import dataclass
from functools import cache
import json
import logging
import os
from pathlib import Path
from typing import Any

import voluptuous as vol

from . import SpdeLabError
from .const import (
    CONF_FUNCTIONAL,
    CONF_GRID,
    CONF_MC,
    CONF_MODEL,
    CONF_OUTPUT,
    CONF_PERTURBATION,
    CONF_SCHEME,
    CONF_SWEEP,
    DEFAULT_C,
    DEFAULT_CHUNK_SIZE,
    DEFAULT_DELTA,
    DEFAULT_DISTANCES,
    DEFAULT_FORMAT,
    DEFAULT_FUNCTIONAL,
    DEFAULT_H_EXPONENTS,
    DEFAULT_KAPPA,
    DEFAULT_MODEL,
    DEFAULT_MODES,
    DEFAULT_N_LIST,
    DEFAULT_N_REF,
    DEFAULT_NU,
    DEFAULT_RHO,
    DEFAULT_SCHEME,
    DEFAULT_SEED,
    DEFAULT_SWEEP_MODES,
    DEFAULT_SWEEP_SCHEME,
    DEFAULT_T,
    DEFAULT_THETA,
    DEFAULT_THREADS,
    ENV_THREADS,
    MODEL_ANDERSON,
    MODEL_CHC,
    MODEL_DIAGONAL_ADDITIVE,
)
from .functionals import test_functional_registry
from .galerkin.models import ModelSpec, build_anderson, build_chc, build_diagonal_additive
from .galerkin.noise import is_power_of_two
from .galerkin.schemes import SchemeKind

_LOGGER = logging.getLogger(__name__)

TRANSLATIONS = Path(__file__).parent / "translations" / "en.json"

ERROR_UNKNOWN_KEY = "unknown_key"
ERROR_INVALID_VALUE = "invalid_value"
ERROR_INVALID_GRID = "invalid_grid"
ERROR_UNKNOWN_NAME = "unknown_name"

BOUND_CONCRETE = "concrete"
BOUND_LAPLACIAN = "laplacian"


def comma_list(item: Callable[[Any], Any]) -> Callable[[Any], tuple[Any, ...]]:
    """Validator for comma-separated lists such as ``8,16,32``."""

    def validate(value: Any) -> tuple[Any, ...]:
        if isinstance(value, str):
            value = [part for part in (p.strip() for p in value.split(",")) if part]
        if not isinstance(value, Iterable):
            raise vol.Invalid(f"expected a comma-separated list, got {value!r}")
        try:
            return tuple(item(part) for part in value)
        except (TypeError, ValueError) as err:
            raise vol.Invalid(f"invalid list entry: {err}") from err

    return validate


def threads_value(value: Any) -> int:
    """Worker count: a positive integer or ``auto`` for all CPUs."""
    if isinstance(value, str) and value.strip().lower() == "auto":
        return os.cpu_count() or 1
    try:
        threads = int(value)
    except (TypeError, ValueError) as err:
        raise vol.Invalid(f"expected a positive integer or 'auto', got {value!r}") from err
    if threads < 1:
        raise vol.Invalid(f"expected a positive integer or 'auto', got {value!r}")
    return threads


_POSITIVE_INT = vol.All(vol.Coerce(int), vol.Range(min=1))
_POSITIVE_FLOAT = vol.All(vol.Coerce(float), vol.Range(min=0, min_included=False))

SECTION_SCHEMAS: dict[str, vol.Schema] = {
    CONF_MODEL: vol.Schema(
        {
            vol.Optional("kind", default=DEFAULT_MODEL): vol.In(
                [MODEL_ANDERSON, MODEL_CHC, MODEL_DIAGONAL_ADDITIVE]
            ),
            vol.Optional("modes", default=DEFAULT_MODES): _POSITIVE_INT,
            vol.Optional("nu", default=DEFAULT_NU): _POSITIVE_FLOAT,
            vol.Optional("kappa", default=DEFAULT_KAPPA): vol.Coerce(float),
            vol.Optional("c", default=DEFAULT_C): _POSITIVE_FLOAT,
            vol.Optional("rho", default=DEFAULT_RHO): _POSITIVE_FLOAT,
            vol.Optional("delta", default=DEFAULT_DELTA): vol.Coerce(float),
            vol.Optional("T", default=DEFAULT_T): _POSITIVE_FLOAT,
        },
        extra=vol.PREVENT_EXTRA,
    ),
    CONF_SCHEME: vol.Schema(
        {
            vol.Optional("kind", default=DEFAULT_SCHEME): vol.In([kind.value for kind in SchemeKind]),
        },
        extra=vol.PREVENT_EXTRA,
    ),
    CONF_GRID: vol.Schema(
        {
            vol.Optional("n_list", default=DEFAULT_N_LIST): comma_list(int),
            vol.Optional("n_ref", default=DEFAULT_N_REF): _POSITIVE_INT,
        },
        extra=vol.PREVENT_EXTRA,
    ),
    CONF_MC: vol.Schema(
        {
            # Without an explicit count each subcommand uses its own default
            vol.Optional("samples"): vol.All(vol.Coerce(int), vol.Range(min=2)),
            vol.Optional("seed", default=DEFAULT_SEED): vol.All(
                vol.Coerce(int), vol.Range(min=0, max=2**64 - 1)
            ),
            vol.Optional("threads", default=DEFAULT_THREADS): threads_value,
            vol.Optional("chunk_size", default=DEFAULT_CHUNK_SIZE): _POSITIVE_INT,
        },
        extra=vol.PREVENT_EXTRA,
    ),
    CONF_OUTPUT: vol.Schema(
        {
            vol.Optional("path"): str,
            vol.Optional("format", default=DEFAULT_FORMAT): vol.In(["csv", "json"]),
        },
        extra=vol.PREVENT_EXTRA,
    ),
    CONF_FUNCTIONAL: vol.Schema(
        {
            vol.Optional("name", default=DEFAULT_FUNCTIONAL): str,
        },
        extra=vol.PREVENT_EXTRA,
    ),
    CONF_PERTURBATION: vol.Schema(
        {
            vol.Optional("n", default=64): _POSITIVE_INT,
            vol.Optional("distances", default=DEFAULT_DISTANCES): comma_list(float),
            vol.Optional("seeds", default=5): _POSITIVE_INT,
            vol.Optional("mode", default=1): _POSITIVE_INT,
            vol.Optional("theta", default=DEFAULT_THETA): vol.All(
                vol.Coerce(float), vol.Range(min=0, max=1, min_included=False, max_included=False)
            ),
        },
        extra=vol.PREVENT_EXTRA,
    ),
    CONF_SWEEP: vol.Schema(
        {
            vol.Optional("modes", default=DEFAULT_SWEEP_MODES): _POSITIVE_INT,
            vol.Optional("h_exponents", default=DEFAULT_H_EXPONENTS): comma_list(int),
            vol.Optional("scheme", default=DEFAULT_SWEEP_SCHEME): vol.All(
                vol.Coerce(int), vol.In([1, 2])
            ),
            vol.Optional("weak", default=False): vol.Boolean(),
            vol.Optional("sharp", default=False): vol.Boolean(),
            vol.Optional("bound", default=BOUND_CONCRETE): vol.In(
                [BOUND_CONCRETE, BOUND_LAPLACIAN]
            ),
        },
        extra=vol.PREVENT_EXTRA,
    ),
}


@cache
def _error_messages() -> dict[str, str]:
    with open(TRANSLATIONS, encoding="utf-8") as handle:
        return json.load(handle)["config"]["error"]


class ConfigValidationError(SpdeLabError):
    """Error to indicate the run configuration is invalid."""

    def __init__(self, error_key: str, path: str, detail: str = "") -> None:
        self.error_key = error_key
        self.path = path
        self.detail = detail
        template = _error_messages().get(error_key, "{path}: {detail}")
        super().__init__(template.format(path=path, detail=detail))


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved configuration, one mapping per section."""

    sections: Mapping[str, Mapping[str, Any]]

    def __getitem__(self, section: str) -> Mapping[str, Any]:
        return self.sections[section]

    @property
    def seed(self) -> int:
        return int(self.sections[CONF_MC]["seed"])

    @property
    def threads(self) -> int:
        return int(self.sections[CONF_MC]["threads"])

    def samples(self, default: int) -> int:
        """Configured sample count, or the subcommand default."""
        return int(self.sections[CONF_MC].get("samples", default))

    def echo(self) -> dict[str, Any]:
        """Flat ``section.key`` mapping with JSON-friendly values.

        The worker count is left out: reports do not depend on it.
        """
        flat = {}
        for section in sorted(self.sections):
            for key in sorted(self.sections[section]):
                if (section, key) == (CONF_MC, "threads"):
                    continue
                value = self.sections[section][key]
                flat[f"{section}.{key}"] = list(value) if isinstance(value, tuple) else value
        return flat


def read_config_file(path: str | Path | None) -> dict[str, dict[str, str]]:
    """Raw section -> key -> string mapping of an INI file (empty without a path)."""
    if path is None:
        return {}
    parser = configparser.ConfigParser(interpolation=None)
    # Keys are case sensitive (model.T)
    parser.optionxform = str
    with open(path, encoding="utf-8") as handle:
        try:
            parser.read_file(handle)
        except configparser.Error as err:
            raise ConfigValidationError(ERROR_INVALID_VALUE, str(path), str(err)) from err
    return {section: dict(parser.items(section)) for section in parser.sections()}


def apply_overrides(
    raw: Mapping[str, Mapping[str, Any]], overrides: Sequence[str]
) -> dict[str, dict[str, Any]]:
    """Apply ``section.key=value`` overrides on top of the file contents."""
    merged = {section: dict(values) for section, values in raw.items()}
    for override in overrides:
        dotted, sep, value = override.partition("=")
        section, dot, key = dotted.strip().partition(".")
        if not sep or not dot or not section or not key:
            raise ConfigValidationError(
                ERROR_INVALID_VALUE, override, "overrides look like section.key=value"
            )
        merged.setdefault(section, {})[key] = value.strip()
    return merged


def _validate_sections(raw: Mapping[str, Mapping[str, Any]]) -> dict[str, dict[str, Any]]:
    for section in raw:
        if section not in SECTION_SCHEMAS:
            raise ConfigValidationError(ERROR_UNKNOWN_KEY, section, "unknown section")
    validated = {}
    for section, schema in SECTION_SCHEMAS.items():
        try:
            validated[section] = dict(schema(dict(raw.get(section, {}))))
        except vol.MultipleInvalid as err:
            first = err.errors[0]
            path = ".".join([section, *(str(part) for part in first.path)])
            key = ERROR_UNKNOWN_KEY if "extra keys" in first.msg else ERROR_INVALID_VALUE
            raise ConfigValidationError(key, path, first.msg) from err
    return validated


def _check_cross_fields(sections: Mapping[str, Mapping[str, Any]]) -> None:
    grid = sections[CONF_GRID]
    n_ref = grid["n_ref"]
    if not is_power_of_two(n_ref):
        raise ConfigValidationError(ERROR_INVALID_GRID, "grid.n_ref", f"{n_ref} is not a power of two")
    if not grid["n_list"]:
        raise ConfigValidationError(ERROR_INVALID_GRID, "grid.n_list", "empty list")
    for n in grid["n_list"]:
        if not is_power_of_two(n) or n_ref % n != 0:
            raise ConfigValidationError(
                ERROR_INVALID_GRID, "grid.n_list", f"{n} is not a power of two dividing {n_ref}"
            )
    if not is_power_of_two(sections[CONF_PERTURBATION]["n"]):
        raise ConfigValidationError(ERROR_INVALID_GRID, "perturbation.n", "not a power of two")
    if sections[CONF_PERTURBATION]["mode"] > sections[CONF_MODEL]["modes"]:
        raise ConfigValidationError(
            ERROR_INVALID_VALUE, "perturbation.mode", "exceeds model.modes"
        )
    name = sections[CONF_FUNCTIONAL]["name"]
    if name not in test_functional_registry():
        raise ConfigValidationError(ERROR_UNKNOWN_NAME, "functional.name", name)


def load_run_config(
    path: str | Path | None = None,
    overrides: Sequence[str] = (),
    *,
    seed: int | None = None,
    out: str | None = None,
    output_format: str | None = None,
    threads: str | None = None,
) -> RunConfig:
    """Read, override, validate and cross-check a run configuration.

    Command-line flags win over dotted overrides, which win over the file.
    ``SPDE_LAB_THREADS`` is used when no ``--threads`` flag is given.
    """
    raw = apply_overrides(read_config_file(path), overrides)
    flags = {
        (CONF_MC, "seed"): seed,
        (CONF_OUTPUT, "path"): out,
        (CONF_OUTPUT, "format"): output_format,
        (CONF_MC, "threads"): threads if threads is not None else os.environ.get(ENV_THREADS),
    }
    for (section, key), value in flags.items():
        if value is not None:
            raw.setdefault(section, {})[key] = value
    sections = _validate_sections(raw)
    _check_cross_fields(sections)
    _LOGGER.debug("Resolved configuration: %s", sections)
    return RunConfig(sections)


def build_model(config: RunConfig) -> ModelSpec:
    """Instantiate the configured model."""
    model = config[CONF_MODEL]
    if model["kind"] == MODEL_ANDERSON:
        return build_anderson(model["modes"], nu=model["nu"], kappa=model["kappa"], T=model["T"])
    if model["kind"] == MODEL_CHC:
        return build_chc(model["modes"], kappa=model["kappa"], T=model["T"])
    return build_diagonal_additive(
        model["modes"], model["c"], model["rho"], model["delta"], T=model["T"]
    )
