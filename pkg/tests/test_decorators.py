import logging

import pytest

from pareto_risk.core import FitMethod, TailFit
from pareto_risk.decorators import (
    record_failures,
    requires_finite_mean,
    validate_inputs,
)
from pareto_risk.distributions import Gpd, ParetoI
from pareto_risk.exceptions import (
    BracketError,
    ConfigError,
    DegenerateDataError,
    InfiniteMeanError,
    InputFileNotFoundError,
    InvalidInputError,
    InvalidParameterError,
    ParetoRiskError,
    SubThresholdError,
)

from .mock_test_data import GPD_1_1_2, PARETO_1_2

# --- Helpers ---


def _fit(alpha: float) -> TailFit:
    return TailFit(
        model=ParetoI(u=1.0, alpha=alpha),
        u=1.0,
        n_exceed=50,
        n_total=100,
        q_u=0.5,
        loglik=0.0,
        method=FitMethod.HILL,
    )


# --- @requires_finite_mean Tests ---


@requires_finite_mean
def _alpha_of(target):
    return "called"


@pytest.mark.parametrize(
    "target",
    [ParetoI(**PARETO_1_2), Gpd(**GPD_1_1_2), _fit(2.0)],
)
def test_requires_finite_mean_passes_heavy_but_integrable_tails(target):
    assert _alpha_of(target) == "called"


@pytest.mark.parametrize("alpha", [0.5, 1.0])
def test_requires_finite_mean_rejects_alpha_at_or_below_one(alpha):
    with pytest.raises(InfiniteMeanError, match="mean is infinite"):
        _alpha_of(ParetoI(u=1.0, alpha=alpha))
    with pytest.raises(InfiniteMeanError):
        _alpha_of(_fit(alpha))


def test_requires_finite_mean_rejects_objects_without_tail_index():
    with pytest.raises(InvalidInputError, match="no tail index"):
        _alpha_of(object())


def test_requires_finite_mean_preserves_function_metadata():
    assert _alpha_of.__name__ == "_alpha_of"


# --- @validate_inputs Tests ---


@validate_inputs(lambda a, b: a < b, "requires a < b")
def _span(a, b):
    return b - a


def test_validate_inputs_passes_valid_arguments():
    assert _span(1.0, 3.0) == 2.0


def test_validate_inputs_raises_with_function_name():
    with pytest.raises(InvalidInputError, match="_span: requires a < b"):
        _span(3.0, 1.0)


def test_validate_inputs_error_is_also_a_value_error():
    with pytest.raises(ValueError):
        _span(2.0, 2.0)


# --- @record_failures Tests ---


def test_record_failures_returns_result_and_no_notes():
    wrapped = record_failures("point")(lambda x: 2 * x)
    assert wrapped(4) == (8, [])


def test_record_failures_turns_package_errors_into_notes(caplog):
    def fails(x):
        raise SubThresholdError(f"level {x} below u")

    with caplog.at_level(logging.DEBUG, logger="pareto_risk.decorators"):
        result, notes = record_failures("point")(fails)(3)
    assert result is None
    assert notes == ["point: SubThresholdError: level 3 below u"]
    assert "SubThresholdError" in caplog.text


def test_record_failures_defaults_label_to_function_name():
    def bracket(x):
        raise BracketError("no sign change")

    _, notes = record_failures()(bracket)(1)
    assert notes[0].startswith("bracket: BracketError")


def test_record_failures_lets_foreign_errors_propagate():
    def broken(x):
        raise KeyError(x)

    with pytest.raises(KeyError):
        record_failures("point")(broken)(1)


# --- Exit codes ---


@pytest.mark.parametrize(
    "error, code",
    [
        (ConfigError("bad"), 2),
        (InputFileNotFoundError("missing"), 3),
        (InvalidParameterError("bad"), 3),
        (DegenerateDataError("flat"), 4),
        (InfiniteMeanError("alpha"), 5),
        (SubThresholdError("low"), 5),
    ],
)
def test_errors_carry_exit_codes(error, code):
    assert isinstance(error, ParetoRiskError)
    assert error.exit_code == code


def test_fit_errors_keep_diagnostics():
    error = DegenerateDataError("flat", diagnostics={"n_exceed": 3})
    assert error.diagnostics == {"n_exceed": 3}
