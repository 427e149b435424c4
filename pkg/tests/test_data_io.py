import json

import numpy as np
import pytest

from pareto_risk.core import FitMethod, OrderedSample, PlotSeries, TailFit
from pareto_risk.data_io import (
    LossTable,
    empirical_cdf,
    load_losses,
    load_returns,
    mean_excess_plot,
    pareto_plot,
    read_series_json,
    write_json,
    write_series_delimited,
    write_series_json,
)
from pareto_risk.distributions import ParetoI
from pareto_risk.exceptions import (
    DataParseError,
    EmptyDataError,
    InputFileNotFoundError,
    InsufficientDataError,
    InvalidInputError,
    InvalidRecordError,
)

from .mock_test_data import (
    LOSS_CSV_BAD_RECORD,
    LOSS_CSV_HEADER_ONLY,
    LOSS_CSV_NON_POSITIVE,
    LOSS_CSV_WITH_HEADER,
    PRICE_CSV,
    PRICE_CSV_UNSORTED,
    RETURN_CSV_SEMICOLON,
)


@pytest.fixture
def write_file(tmp_path):
    def _write(text: str, name: str = "data.csv"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write


# --- Loss tables ---


@pytest.mark.parametrize("column", ["loss", 2, "2"])
def test_load_losses_by_name_or_position(write_file, column):
    table = load_losses(write_file(LOSS_CSV_WITH_HEADER), column=column)
    assert table.losses.tolist() == [1.5, 2.25, 3.0, 10.0]
    assert table.n == 4
    assert table.to_sample().values.tolist() == [1.5, 2.25, 3.0, 10.0]


def test_load_losses_with_period_labels(write_file):
    table = load_losses(
        write_file(LOSS_CSV_WITH_HEADER), column="loss", period_column="year"
    )
    assert table.periods.tolist() == ["1980", "1980", "1981", "1982"]
    assert table.claims_per_period() == pytest.approx(4.0 / 3.0)
    assert table.claims_per_period(years=8) == pytest.approx(0.5)


def test_claims_per_period_needs_periods_or_years():
    table = LossTable(losses=[1.0, 2.0])
    with pytest.raises(InvalidInputError):
        table.claims_per_period()
    with pytest.raises(InvalidInputError):
        table.claims_per_period(years=0)


def test_loss_table_rejects_non_positive_losses():
    with pytest.raises(ValueError):
        LossTable(losses=[1.0, 0.0])


def test_load_losses_reports_file_line_of_bad_record(write_file):
    with pytest.raises(InvalidRecordError) as excinfo:
        load_losses(write_file(LOSS_CSV_BAD_RECORD))
    assert excinfo.value.row == 4
    assert "row 4" in str(excinfo.value)


def test_load_losses_rejects_non_positive_values(write_file):
    with pytest.raises(InvalidRecordError) as excinfo:
        load_losses(write_file(LOSS_CSV_NON_POSITIVE))
    assert excinfo.value.row == 3


def test_load_losses_without_header_counts_rows_from_one(write_file):
    with pytest.raises(InvalidRecordError) as excinfo:
        load_losses(write_file("1.0\nx\n"), header=False)
    assert excinfo.value.row == 2


@pytest.mark.parametrize("text", [LOSS_CSV_HEADER_ONLY, ""])
def test_load_losses_rejects_empty_files(write_file, text):
    with pytest.raises(EmptyDataError):
        load_losses(write_file(text))


def test_load_losses_missing_file(tmp_path):
    with pytest.raises(InputFileNotFoundError):
        load_losses(tmp_path / "missing.csv")
    with pytest.raises(FileNotFoundError):
        load_losses(tmp_path / "missing.csv")


@pytest.mark.parametrize("column", ["amount", 3, 0])
def test_load_losses_unknown_column(write_file, column):
    with pytest.raises(DataParseError):
        load_losses(write_file(LOSS_CSV_WITH_HEADER), column=column)


# --- Return series ---


def test_load_returns_from_dated_prices(write_file):
    series = load_returns(write_file(PRICE_CSV))
    np.testing.assert_allclose(series.returns, [np.log(1.1), np.log(0.9)])
    assert len(series.timestamps) == 2
    _, labels = series.time_axis()
    assert labels[0].startswith("2020-01-02")


def test_load_returns_rejects_unsorted_timestamps(write_file):
    with pytest.raises(DataParseError, match="row 4"):
        load_returns(write_file(PRICE_CSV_UNSORTED))


def test_load_returns_in_return_mode(write_file):
    series = load_returns(
        write_file(RETURN_CSV_SEMICOLON),
        mode="return",
        value_column=1,
        time_column=2,
        delimiter=";",
        header=False,
    )
    assert series.returns.tolist() == [0.01, -0.02, 0.005]
    assert series.timestamps.tolist() == [1.0, 2.0, 3.0]


def test_load_returns_by_row_order(write_file):
    series = load_returns(write_file(PRICE_CSV), value_column="price", time_column=None)
    assert series.timestamps.tolist() == [1, 2]


def test_load_returns_rejects_non_positive_prices(write_file):
    with pytest.raises(InvalidRecordError):
        load_returns(write_file("t,price\n1,100\n2,0\n"))


def test_load_returns_needs_two_prices(write_file):
    with pytest.raises(EmptyDataError):
        load_returns(write_file("t,price\n1,100\n"))


def test_load_returns_rejects_unreadable_timestamps(write_file):
    with pytest.raises(DataParseError):
        load_returns(write_file("t,price\nmonday,100\ntuesday,101\n"))


# --- Empirical diagnostics ---


def test_empirical_cdf_is_right_continuous():
    data = OrderedSample(values=[1.0, 2.0, 2.0, 3.0])
    assert empirical_cdf(data, 2.0) == 0.75
    assert empirical_cdf(data, 0.5) == 0.0
    np.testing.assert_allclose(empirical_cdf(data, [1.0, 3.0]), [0.25, 1.0])


def test_pareto_plot_of_exact_pareto_positions():
    positions = 1.0 - (np.arange(1, 5) - 0.5) / 4.0
    data = OrderedSample(values=np.concatenate([[0.5], positions**-0.5]))
    series = pareto_plot(data, 1.0)
    assert len(series) == 4
    np.testing.assert_allclose(series.y, positions)
    assert series.metadata["slope"] == pytest.approx(-2.0, abs=1e-10)
    assert series.metadata["intercept"] == pytest.approx(0.0, abs=1e-10)
    assert series.metadata["vertical_stack"] is False


def test_pareto_plot_flags_tied_exceedances():
    series = pareto_plot(OrderedSample(values=[1.0, 5.0, 5.0, 5.0]), 2.0)
    assert series.metadata["vertical_stack"] is True
    assert series.metadata["slope"] is None


def test_pareto_plot_needs_two_exceedances():
    with pytest.raises(InsufficientDataError):
        pareto_plot(OrderedSample(values=[1.0, 2.0, 3.0]), 2.5)


@pytest.mark.parametrize("offset", [0.0, 1.5])
def test_pareto_plot_rejects_bad_offsets(offset):
    with pytest.raises(InvalidInputError):
        pareto_plot(OrderedSample(values=[1.0, 2.0, 3.0]), 0.5, offset=offset)


def test_mean_excess_plot_leaves_sparse_levels_as_gaps():
    data = OrderedSample(values=np.arange(1.0, 11.0))
    series = mean_excess_plot(data, [5.0, 9.5])
    assert series.y[0] == pytest.approx(3.0)
    assert series.y[1] is None and series.lo[1] is None
    assert series.metadata["n_over"] == [5, 1]
    assert len(series.metadata["failures"]) == 1


# --- Writers ---


def test_series_json_round_trip(tmp_path):
    series = PlotSeries(
        x=[1.0, 2.0],
        y=[0.5, None],
        lo=[0.1, None],
        hi=[0.9, None],
        metadata={"x": "k"},
    )
    path = write_series_json(series, tmp_path / "nested" / "series.json")
    assert read_series_json(path) == series


def test_read_series_json_errors(tmp_path):
    with pytest.raises(InputFileNotFoundError):
        read_series_json(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text('{"x": [1.0], "y": [1.0, 2.0]}', encoding="utf-8")
    with pytest.raises(DataParseError):
        read_series_json(bad)


def test_delimited_series_leaves_gaps_empty(tmp_path):
    series = PlotSeries(x=[1.0, 2.0], y=[0.5, None])
    path = write_series_delimited(series, tmp_path / "series.csv")
    assert path.read_text(encoding="utf-8").splitlines() == ["x,y", "1,0.5", "2,"]


def test_write_json_serializes_nested_models(tmp_path):
    fit = TailFit(
        model=ParetoI(u=1.0, alpha=2.0),
        u=1.0,
        n_exceed=40,
        n_total=100,
        q_u=0.4,
        loglik=-12.5,
        method=FitMethod.HILL,
    )
    path = write_json({"fit": fit, "n": 100}, tmp_path / "report.json")
    payload = json.loads(path.read_text(encoding="utf-8"))
    assert payload["n"] == 100
    assert payload["fit"]["model"] == {"kind": "pareto1", "u": 1.0, "alpha": 2.0}
    assert payload["fit"]["method"] == "hill"
