"""Test run configuration loading and validation."""

import os

import pytest

from spde_lab.config_flow import (
    ERROR_INVALID_GRID,
    ERROR_INVALID_VALUE,
    ERROR_UNKNOWN_KEY,
    ERROR_UNKNOWN_NAME,
    ConfigValidationError,
    build_model,
    load_run_config,
)
from spde_lab.const import DEFAULT_N_LIST, DEFAULT_SEED, ENV_THREADS
from spde_lab.galerkin.models import DriftKind


@pytest.fixture(autouse=True)
def _no_thread_env(monkeypatch):
    monkeypatch.delenv(ENV_THREADS, raising=False)


def test_defaults() -> None:
    """Test an empty configuration resolves to the defaults."""
    config = load_run_config()
    assert config["model"]["kind"] == "anderson"
    assert config["scheme"]["kind"] == "linear-implicit"
    assert config["grid"]["n_list"] == DEFAULT_N_LIST
    assert config.seed == DEFAULT_SEED
    assert config.threads == 1
    assert config.samples(123) == 123
    assert config["output"]["format"] == "csv"


def test_file_overrides_and_flags(write_config) -> None:
    """Test flags win over dotted overrides, which win over the file."""
    path = write_config("[mc]\nseed = 5\nsamples = 40\n[model]\nT = 2.0\nmodes = 8\n")
    config = load_run_config(path, ["mc.seed=6", "grid.n_list=4,8"])
    assert config.seed == 6
    assert config.samples(10) == 40
    assert config["model"]["T"] == 2.0
    assert config["grid"]["n_list"] == (4, 8)
    assert load_run_config(path, ["mc.seed=6"], seed=7).seed == 7


def test_echo() -> None:
    """Test the flat echo leaves out the worker count and lists tuples."""
    echo = load_run_config(overrides=["grid.n_list=4,8"], threads="3").echo()
    assert "mc.threads" not in echo
    assert echo["grid.n_list"] == [4, 8]
    assert echo["mc.seed"] == DEFAULT_SEED


def test_unknown_key() -> None:
    """Test an unknown key is rejected with its dotted path."""
    with pytest.raises(ConfigValidationError) as err:
        load_run_config(overrides=["model.foo=1"])
    assert err.value.error_key == ERROR_UNKNOWN_KEY
    assert err.value.path == "model.foo"
    assert str(err.value).startswith("Unknown configuration key model.foo")


def test_unknown_section(write_config) -> None:
    """Test an unknown section is rejected."""
    with pytest.raises(ConfigValidationError) as err:
        load_run_config(write_config("[bogus]\nkey = 1\n"))
    assert err.value.error_key == ERROR_UNKNOWN_KEY


@pytest.mark.parametrize(
    "override", ["model.modes=0", "mc.samples=1", "model.kind=heat", "sweep.scheme=3", "mc.threads=none"]
)
def test_invalid_value(override: str) -> None:
    """Test out-of-range and malformed values."""
    with pytest.raises(ConfigValidationError) as err:
        load_run_config(overrides=[override])
    assert err.value.error_key == ERROR_INVALID_VALUE
    assert err.value.path == override.partition("=")[0]


def test_malformed_override() -> None:
    """Test overrides must look like section.key=value."""
    with pytest.raises(ConfigValidationError) as err:
        load_run_config(overrides=["seed"])
    assert err.value.error_key == ERROR_INVALID_VALUE


@pytest.mark.parametrize(
    "overrides", [["grid.n_ref=1000"], ["grid.n_list=3"], ["grid.n_list=16", "grid.n_ref=8"]]
)
def test_invalid_grid(overrides: list[str]) -> None:
    """Test N_ref must be a power of two divisible by every N."""
    with pytest.raises(ConfigValidationError) as err:
        load_run_config(overrides=overrides)
    assert err.value.error_key == ERROR_INVALID_GRID


def test_unknown_functional() -> None:
    """Test functional names are checked against the registry."""
    with pytest.raises(ConfigValidationError) as err:
        load_run_config(overrides=["functional.name=cubic"])
    assert err.value.error_key == ERROR_UNKNOWN_NAME


def test_perturbation_mode_within_modes() -> None:
    """Test the perturbed mode must exist."""
    with pytest.raises(ConfigValidationError):
        load_run_config(overrides=["model.modes=4", "perturbation.mode=5"])


def test_threads_from_environment(monkeypatch) -> None:
    """Test the environment supplies the worker count unless the flag does."""
    monkeypatch.setenv(ENV_THREADS, "3")
    assert load_run_config().threads == 3
    assert load_run_config(threads="2").threads == 2
    assert load_run_config(threads="auto").threads == (os.cpu_count() or 1)


def test_sweep_options() -> None:
    """Test booleans and h exponents in the sweep section."""
    config = load_run_config(overrides=["sweep.weak=true", "sweep.h_exponents=3,5", "sweep.bound=laplacian"])
    assert config["sweep"]["weak"] is True
    assert config["sweep"]["sharp"] is False
    assert config["sweep"]["h_exponents"] == (3, 5)


@pytest.mark.parametrize(
    ("kind", "drift"),
    [("anderson", DriftKind.ZERO), ("chc", DriftKind.IDENTITY), ("diagonal-additive", DriftKind.ZERO)],
)
def test_build_model(kind: str, drift: DriftKind) -> None:
    """Test every configured model kind can be built."""
    model = build_model(load_run_config(overrides=[f"model.kind={kind}", "model.modes=6"]))
    assert model.modes == 6
    assert model.drift_kind is drift
    assert model.is_additive == (kind == "diagonal-additive")
