from pathlib import Path

import pytest
from pydantic import ValidationError

from pareto_risk.config import RunConfig, default_output_dir
from pareto_risk.core import FilterKind, MeanEstimator, ModelKind
from pareto_risk.utils.patterns import (
    DEFAULT_OUTPUT_DIR,
    DEFAULT_P_LEVELS,
    OUTPUT_DIR_ENV_VAR,
)


def _fit_config(**overrides) -> RunConfig:
    values = {"command": "fit", "input": "losses.csv", "threshold_q": 0.9}
    values.update(overrides)
    return RunConfig(**values)


# --- Defaults ---


def test_defaults():
    config = _fit_config()
    assert config.models == [ModelKind.GPD]
    assert config.p_levels == list(DEFAULT_P_LEVELS)
    assert config.mean_estimators == [MeanEstimator.HYBRID, MeanEstimator.SAMPLE]
    assert config.filter is FilterKind.GARCH
    assert config.input == Path("losses.csv")
    assert config.level == 0.95


def test_output_dir_follows_environment(monkeypatch):
    monkeypatch.setenv(OUTPUT_DIR_ENV_VAR, "/tmp/pareto-out")
    assert default_output_dir() == Path("/tmp/pareto-out")
    assert RunConfig(command="study").output_dir == Path("/tmp/pareto-out")
    monkeypatch.delenv(OUTPUT_DIR_ENV_VAR)
    assert default_output_dir() == Path(DEFAULT_OUTPUT_DIR)


def test_study_needs_no_input():
    config = RunConfig(command="study", tau_grid=[-1.0, 0.0], sample_size=200)
    assert config.input is None
    assert config.tau_grid == [-1.0, 0.0]


# --- Validation ---


@pytest.mark.parametrize(
    "overrides",
    [
        {"threshold": 2.0},  # both threshold forms
        {"threshold_q": None},  # neither
        {"threshold_q": 1.0},
        {"threshold_q": -0.1},
        {"models": []},
        {"p_levels": [0.0]},
        {"p_levels": [0.01, 1.0]},
        {"stability_levels": [1.5]},
        {"level": 1.0},
        {"return_periods": [0.0]},
        {"deductibles": [-5.0]},
        {"tau_grid": [0.5]},
        {"sample_size": 5},
        {"models": ["lognormal"]},
        {"unknown_option": 1},
    ],
)
def test_invalid_settings_are_rejected(overrides):
    with pytest.raises(ValidationError):
        _fit_config(**overrides)


def test_commands_other_than_study_need_input():
    with pytest.raises(ValidationError, match="needs --input"):
        RunConfig(command="dynamic")


def test_premium_needs_a_deductible():
    with pytest.raises(ValidationError, match="deductible"):
        _fit_config(command="premium")
    assert _fit_config(command="premium", deductibles=[5.0]).deductibles == [5.0]


def test_dynamic_command_takes_no_threshold():
    config = RunConfig(command="dynamic", input="prices.csv", threshold_q=None)
    assert config.tail == "lower"
    assert config.time_column == "1"


def test_config_is_frozen():
    config = _fit_config()
    with pytest.raises(ValidationError):
        config.level = 0.9


# --- Provenance ---


def test_resolved_states_the_absolute_threshold():
    resolved = _fit_config().resolved(2.5)
    assert resolved.threshold == 2.5
    assert resolved.threshold_q is None


def test_provenance_is_plain_json():
    provenance = _fit_config(models=["pareto", "epd"]).as_provenance()
    assert provenance["models"] == ["pareto", "epd"]
    assert provenance["input"] == "losses.csv"
    assert provenance["command"] == "fit"


def test_provenance_leaves_out_the_output_location():
    provenance = _fit_config(output_dir="/tmp/a").as_provenance()
    assert "output_dir" not in provenance
    assert provenance == _fit_config(output_dir="/tmp/b").as_provenance()
