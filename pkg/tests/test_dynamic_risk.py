import numpy as np
import pytest

from pareto_risk.core import FilterKind, FitMethod, ModelKind, OrderedSample, PlotSeries
from pareto_risk.distributions import ParetoI, sample
from pareto_risk.dynamic_risk import (
    GarchParams,
    ReturnSeries,
    VolSeries,
    backtest,
    dynamic_var_es,
    ewma_vol,
    filtered_var_es,
    fit_garch11,
    garch_filter,
    garch_loglik,
    gaussian_var_es,
    residuals,
    simulate_garch11,
    sliding_window_fit,
)
from pareto_risk.exceptions import InsufficientDataError, InvalidInputError
from pareto_risk.risk_measures import ComposedTail, es_composed, var_composed
from pareto_risk.tail_estimation.fitting import fit_tail
from pareto_risk.utils.patterns import NOTE_TRUNCATED_WINDOW

from .mock_test_data import (
    GARCH_LENGTH,
    GARCH_TRUE,
    GAUSSIAN_ES_001,
    GAUSSIAN_VAR_001,
    STUDENT_DF,
)


def _student_innovations(seed: int, n: int) -> np.ndarray:
    # Student-t(4) has variance 2
    rng = np.random.default_rng(seed)
    return rng.standard_t(STUDENT_DF, n) / np.sqrt(STUDENT_DF / (STUDENT_DF - 2.0))


def _garch_series(seed: int, n: int) -> ReturnSeries:
    params = GarchParams(**GARCH_TRUE)
    series, _ = simulate_garch11(
        params, n, seed, innovations=_student_innovations(seed, n)
    )
    return series


# --- ReturnSeries ---


def test_return_series_requires_increasing_timestamps():
    with pytest.raises(ValueError):
        ReturnSeries(timestamps=[1, 3, 2], returns=[0.1, 0.2, 0.3])


def test_return_series_requires_aligned_arrays():
    with pytest.raises(ValueError):
        ReturnSeries(timestamps=[1, 2], returns=[0.1, 0.2, 0.3])


def test_return_series_transformations():
    series = ReturnSeries.from_returns([0.1, -0.2, 0.3])
    assert series.timestamps.tolist() == [0, 1, 2]
    assert series.negated().returns.tolist() == [-0.1, 0.2, -0.3]
    np.testing.assert_allclose(series.scaled(100.0).returns, [10.0, -20.0, 30.0])
    assert len(series) == 3


def test_time_axis_labels_datetimes():
    stamps = np.array(["2020-01-01", "2020-01-02"], dtype="datetime64[D]")
    xs, labels = ReturnSeries(timestamps=stamps, returns=[0.1, 0.2]).time_axis()
    assert xs == [0.0, 1.0]
    assert labels == ["2020-01-01", "2020-01-02"]
    xs, labels = ReturnSeries.from_returns([0.1, 0.2]).time_axis()
    assert labels is None


# --- Filters ---


@pytest.mark.parametrize(
    "params",
    [
        {"alpha0": 0.0, "alpha1": 0.1, "beta1": 0.8},
        {"alpha0": 0.1, "alpha1": -0.1, "beta1": 0.8},
        {"alpha0": 0.1, "alpha1": 0.2, "beta1": 0.8},
    ],
)
def test_garch_params_reject_non_stationary_or_negative_values(params):
    with pytest.raises(ValueError):
        GarchParams(**params)


def test_garch_params_unconditional_variance():
    params = GarchParams(**GARCH_TRUE)
    assert params.persistence == pytest.approx(0.95)
    assert params.unconditional_variance == pytest.approx(1.0)


def test_garch_filter_reproduces_simulated_volatility():
    params = GarchParams(**GARCH_TRUE)
    series, sigma = simulate_garch11(params, 500, 3, mu=0.2)
    vol = garch_filter(series, params, mu=0.2, sigma0_sq=1.0)
    np.testing.assert_allclose(vol.sigma, sigma, rtol=1e-10)
    e_last = series.returns[-1] - 0.2
    forecast_sq = (
        params.alpha0 + params.alpha1 * e_last**2 + params.beta1 * sigma[-1] ** 2
    )
    assert vol.forecast == pytest.approx(np.sqrt(forecast_sq), rel=1e-10)


def test_ewma_recursion():
    vol = ewma_vol(ReturnSeries.from_returns([1.0, 2.0, 3.0]), beta=0.5, sigma0=1.0)
    # variances 1, 1, 2.5 and forecast 5.75
    np.testing.assert_allclose(vol.sigma, np.sqrt([1.0, 1.0, 2.5]), rtol=1e-12)
    assert vol.forecast == pytest.approx(np.sqrt(5.75), rel=1e-12)


@pytest.mark.parametrize("sigma0", [None, 0.5])
def test_ewma_is_garch_without_intercept(sigma0):
    series = _garch_series(11, 500)
    beta = 0.94
    # alpha1 + beta1 = 1 is outside the stationary region, so skip validation
    params = GarchParams.model_construct(alpha0=0.0, alpha1=1.0 - beta, beta1=beta)
    sigma0_sq = None if sigma0 is None else sigma0**2
    garch = garch_filter(series, params, mu=0.0, sigma0_sq=sigma0_sq)
    ewma = ewma_vol(series, beta=beta, sigma0=sigma0)
    np.testing.assert_allclose(ewma.sigma, garch.sigma, rtol=1e-12)
    assert ewma.forecast == pytest.approx(garch.forecast, rel=1e-12)


@pytest.mark.parametrize("beta", [0.0, 1.0])
def test_ewma_rejects_degenerate_weights(beta):
    with pytest.raises(InvalidInputError):
        ewma_vol(ReturnSeries.from_returns([1.0, 2.0]), beta=beta)


def test_garch_loglik_prefers_true_parameters():
    series = _garch_series(4, 2000)
    true = garch_loglik(series, GarchParams(**GARCH_TRUE), sigma0_sq=1.0)
    flat = garch_loglik(
        series, GarchParams(alpha0=1.0, alpha1=0.0, beta1=0.0), sigma0_sq=1.0
    )
    assert true > flat


def test_garch_fit_needs_a_hundred_returns():
    with pytest.raises(InsufficientDataError):
        fit_garch11(ReturnSeries.from_returns(np.linspace(-1.0, 1.0, 99)))


def test_residuals_are_standardized_and_aligned():
    series = ReturnSeries.from_returns([1.0, 3.0, -1.0])
    vol = ewma_vol(series, beta=0.5, sigma0=2.0)
    x = residuals(series, 1.0, vol)
    np.testing.assert_allclose(x, (series.returns - 1.0) / vol.sigma)
    with pytest.raises(InvalidInputError):
        residuals(ReturnSeries.from_returns([1.0, 2.0]), 0.0, vol)


# --- Two-step VaR and ES ---


def test_filtered_var_es_scales_residual_measures():
    series = _garch_series(5, 3000)
    vol = ewma_vol(series)
    result = filtered_var_es(series, 0.0, vol, 0.01, ModelKind.PARETO)
    np.testing.assert_allclose(result.var.y, vol.sigma * result.var_residual)
    np.testing.assert_allclose(result.es.y, vol.sigma * result.es_residual)
    assert result.es_residual > result.var_residual > result.residual_fit.u
    assert result.forecast_var == pytest.approx(vol.forecast * result.var_residual)
    assert result.var.metadata["p"] == 0.01


def test_dynamic_var_es_with_ewma_filter():
    series = _garch_series(6, 3000)
    result = dynamic_var_es(series, FilterKind.EWMA, p=0.01, tail_level=0.9)
    assert result.garch is None
    assert result.mu == 0.0
    assert result.residual_fit.method.value == "mle_gpd"
    assert len(result.var) == len(series)
    assert all(es > v for es, v in zip(result.es.y, result.var.y))


@pytest.mark.parametrize(
    "filter_kind, model_kind, rel",
    [
        (FilterKind.EWMA, ModelKind.PARETO, 1e-9),
        pytest.param(FilterKind.GARCH, ModelKind.GPD, 1e-6, marks=pytest.mark.slow),
    ],
)
def test_dynamic_var_es_scales_with_the_returns(filter_kind, model_kind, rel):
    series = _garch_series(6, 3000)
    base = dynamic_var_es(series, filter_kind, p=0.01, model_kind=model_kind)
    doubled = dynamic_var_es(
        series.scaled(2.0), filter_kind, p=0.01, model_kind=model_kind
    )
    np.testing.assert_allclose(doubled.var.y, np.multiply(2.0, base.var.y), rtol=rel)
    np.testing.assert_allclose(doubled.es.y, np.multiply(2.0, base.es.y), rtol=rel)
    assert doubled.forecast_var == pytest.approx(2.0 * base.forecast_var, rel=rel)


def test_unit_volatility_gives_the_static_composed_var():
    returns = sample(ParetoI(u=1.0, alpha=3.0), 13, 500)
    series = ReturnSeries.from_returns(returns)
    unit = VolSeries(sigma=np.ones(len(series)), forecast=1.0)
    result = filtered_var_es(series, 0.0, unit, 0.01, ModelKind.PARETO, tail_level=0.9)
    data = OrderedSample(values=returns)
    u = data.quantile(0.9)
    assert result.residual_fit.u == u
    fit = fit_tail(data, u, FitMethod.HILL, with_ci=False)
    ct = ComposedTail.from_sample(data, fit)
    np.testing.assert_allclose(result.var.y, var_composed(ct, 0.01), rtol=1e-12)
    np.testing.assert_allclose(result.es.y, es_composed(ct, 0.01), rtol=1e-12)
    assert result.forecast_var == pytest.approx(var_composed(ct, 0.01), rel=1e-12)


def test_residual_threshold_must_be_positive():
    series = ReturnSeries.from_returns(-np.linspace(1.0, 2.0, 200))
    vol = ewma_vol(series)
    with pytest.raises(InvalidInputError):
        filtered_var_es(series, 0.0, vol, 0.01, tail_level=0.5)


# --- Sliding windows ---


@pytest.fixture(scope="module")
def positive_series() -> ReturnSeries:
    rng = np.random.default_rng(12)
    return ReturnSeries.from_returns(np.abs(rng.standard_t(3.0, 41)) + 0.1)


def test_sliding_window_truncates_edges(positive_series):
    series = sliding_window_fit(
        positive_series, half_width=10, tail_level=0.8, p=0.1, model_kind="pareto"
    )
    assert len(series) == 41
    assert sum(series.metadata["truncated"]) == 20
    assert series.metadata["notes"] == [NOTE_TRUNCATED_WINDOW]
    assert all(y is not None for y in series.y)


def test_sliding_window_shifts_edges(positive_series):
    series = sliding_window_fit(
        positive_series,
        half_width=10,
        tail_level=0.8,
        p=0.1,
        model_kind="pareto",
        edge="shift",
    )
    assert not any(series.metadata["truncated"])
    assert series.metadata["notes"] == []
    assert series.y[0] == series.y[10]
    assert series.y[-1] == series.y[-11]


def test_sliding_window_leaves_failed_windows_as_gaps(positive_series):
    # p above the window tail fraction cannot be served by the tail fit
    series = sliding_window_fit(
        positive_series, half_width=10, tail_level=0.8, p=0.5, model_kind="pareto"
    )
    assert all(y is None for y in series.y)
    assert len(series.metadata["failures"]) == 41


@pytest.mark.parametrize(
    "kwargs",
    [{"half_width": 21}, {"half_width": 0}, {"half_width": 5, "edge": "wrap"}],
)
def test_sliding_window_rejects_bad_settings(positive_series, kwargs):
    with pytest.raises(InvalidInputError):
        sliding_window_fit(positive_series, **kwargs)


# --- Gaussian benchmark and backtesting ---


def test_gaussian_var_es():
    var, es = gaussian_var_es(0.0, 1.0, 0.01)
    assert var == pytest.approx(GAUSSIAN_VAR_001, rel=1e-12)
    assert es == pytest.approx(GAUSSIAN_ES_001, rel=1e-12)
    var, es = gaussian_var_es(1.0, 2.0, 0.01)
    assert var == pytest.approx(1.0 + 2.0 * GAUSSIAN_VAR_001, rel=1e-12)
    with pytest.raises(InvalidInputError):
        gaussian_var_es(0.0, 0.0, 0.01)


def test_backtest_skips_gaps():
    var_series = PlotSeries(x=[0, 1, 2, 3, 4], y=[1.0, None, 1.0, 1.0, 1.0])
    series = ReturnSeries.from_returns([2.0, 5.0, 0.0, 0.0, 1.5])
    report = backtest(var_series, series, 0.05)
    assert report.violations == 2
    assert report.n == 4
    assert report.rate == 0.5
    assert report.expected == pytest.approx(0.2)
    assert report.kupiec_pvalue < 0.05
    assert not report.within_band


def test_backtest_exact_rate_has_unit_pvalue():
    var_series = PlotSeries(x=list(range(10)), y=[0.0] * 10)
    series = ReturnSeries.from_returns([1.0] + [-1.0] * 9)
    report = backtest(var_series, series, 0.1)
    assert report.violations == 1
    assert report.kupiec_pvalue == pytest.approx(1.0)
    assert report.within_band


def test_backtest_rejects_misaligned_or_empty_series():
    series = ReturnSeries.from_returns([1.0, 2.0])
    with pytest.raises(InvalidInputError):
        backtest(PlotSeries(x=[0], y=[1.0]), series, 0.01)
    with pytest.raises(InvalidInputError):
        backtest(PlotSeries(x=[0, 1], y=[None, None]), series, 0.01)


def test_simulate_garch_checks_innovation_length():
    with pytest.raises(InvalidInputError):
        simulate_garch11(GarchParams(**GARCH_TRUE), 10, 0, innovations=np.zeros(9))


# --- Simulation checks ---


@pytest.mark.slow
def test_garch_quasi_likelihood_recovers_parameters():
    fit = fit_garch11(_garch_series(7, GARCH_LENGTH))
    assert fit.params.alpha1 == pytest.approx(GARCH_TRUE["alpha1"], abs=0.05)
    assert fit.params.beta1 == pytest.approx(GARCH_TRUE["beta1"], abs=0.1)
    assert 0.01 <= fit.params.alpha0 <= 0.15
    assert not fit.at_boundary


@pytest.mark.slow
def test_garch_filtered_var_passes_in_sample_backtest():
    series = _garch_series(9, GARCH_LENGTH)
    result = dynamic_var_es(
        series, FilterKind.GARCH, p=0.005, model_kind=ModelKind.GPD, tail_level=0.95
    )
    report = backtest(result.var, series, 0.005)
    assert result.garch is not None
    assert report.within_band
