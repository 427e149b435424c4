import numpy as np
import pytest
from scipy import integrate

from pareto_risk.core import FitMethod, OrderedSample, TailFit
from pareto_risk.distributions import Epd, Gpd, ParetoI, sample, survival
from pareto_risk.exceptions import (
    ExtrapolationDomainError,
    InfiniteMeanError,
    InsufficientDataError,
    InvalidInputError,
    SubThresholdError,
)
from pareto_risk.reinsurance import (
    PremiumQuote,
    empirical_mean_excess,
    fitted_mean_excess,
    premium_curve,
    premium_stability,
    pure_premium,
    return_level,
    return_level_curve,
    return_period,
)
from pareto_risk.tail_estimation.hill import hill
from pareto_risk.utils.patterns import NOTE_DELTA_UNAVAILABLE

from .mock_test_data import (
    EPD_SMOOTH,
    GPD_1_1_2,
    RETURN_LEVEL_ALPHA,
    RETURN_LEVEL_N_EXCEED,
    RETURN_LEVEL_N_TOTAL,
    RETURN_LEVEL_T,
    RETURN_LEVEL_U,
    RETURN_LEVEL_Z,
)


def _fit(model, n_exceed=RETURN_LEVEL_N_EXCEED, n_total=RETURN_LEVEL_N_TOTAL):
    method = {
        "pareto1": FitMethod.HILL,
        "gpd": FitMethod.MLE_GPD,
        "epd": FitMethod.MLE_EPD,
    }[model.kind]
    return TailFit(
        model=model,
        u=model.u,
        n_exceed=n_exceed,
        n_total=n_total,
        q_u=n_exceed / n_total,
        loglik=0.0,
        method=method,
    )


@pytest.fixture
def pareto_fit() -> TailFit:
    return _fit(ParetoI(u=RETURN_LEVEL_U, alpha=RETURN_LEVEL_ALPHA))


@pytest.fixture(scope="module")
def loss_sample() -> OrderedSample:
    return OrderedSample(values=sample(Gpd(u=1.0, sigma=2.0, alpha=2.5), 21, 2000))


# --- Return levels ---


def test_return_level_of_composed_pareto(pareto_fit):
    assert return_level(pareto_fit, RETURN_LEVEL_T) == pytest.approx(
        RETURN_LEVEL_Z, rel=1e-12
    )
    assert return_period(pareto_fit, RETURN_LEVEL_Z) == pytest.approx(
        RETURN_LEVEL_T, rel=1e-12
    )


@pytest.mark.parametrize(
    "model", [ParetoI(u=2.0, alpha=1.5), Gpd(**GPD_1_1_2), Epd(**EPD_SMOOTH)]
)
@pytest.mark.parametrize("t", [10.0, 250.0, 1e5])
def test_return_level_is_exceeded_once_per_period(model, t):
    fit = _fit(model)
    z = return_level(fit, t)
    assert z >= fit.u
    assert fit.q_u * survival(model, z) == pytest.approx(1.0 / t, rel=1e-8)


def test_return_level_at_the_threshold(pareto_fit):
    assert return_level(pareto_fit, 1.0 / pareto_fit.q_u) == pytest.approx(
        RETURN_LEVEL_U
    )


def test_return_level_below_threshold_is_refused(pareto_fit):
    with pytest.raises(SubThresholdError):
        return_level(pareto_fit, 5.0)
    with pytest.raises(SubThresholdError):
        return_period(pareto_fit, 5.0)


@pytest.mark.parametrize("t", [0.0, -10.0])
def test_return_level_rejects_non_positive_periods(pareto_fit, t):
    with pytest.raises(InvalidInputError):
        return_level(pareto_fit, t)


def test_delta_curve_for_strict_pareto(pareto_fit):
    curve = return_level_curve(pareto_fit, [1000.0, 100.0, 10.0])
    assert [r.t for r in curve.records] == [10.0, 100.0, 1000.0]
    record = curve.records[-1]
    se = RETURN_LEVEL_Z * np.log(100.0) / (RETURN_LEVEL_ALPHA * np.sqrt(10.0))
    assert record.ci.hi - record.z == pytest.approx(1.959963984540054 * se)
    assert curve.records[0].ci.width == pytest.approx(0.0, abs=1e-12)
    plot = curve.as_plot_series()
    assert plot.y == [r.z for r in curve.records]
    assert plot.metadata["ci_method"] == "delta"


def test_delta_curve_for_gpd_widens_with_period():
    curve = return_level_curve(_fit(Gpd(**GPD_1_1_2), 50, 500), [20.0, 200.0, 2000.0])
    widths = [r.ci.width for r in curve.records]
    assert widths == sorted(widths)
    assert all(r.ci.contains(r.z) for r in curve.records)


def test_delta_curve_for_epd_carries_a_note():
    curve = return_level_curve(_fit(Epd(**EPD_SMOOTH)), [10.0, 100.0])
    assert curve.notes == [NOTE_DELTA_UNAVAILABLE.format("mle_epd")]
    assert all(r.ci is None for r in curve.records)


def test_curve_without_bands(pareto_fit):
    curve = return_level_curve(pareto_fit, [10.0, 100.0], ci_method=None)
    assert curve.level is None
    assert all(r.ci is None for r in curve.records)


def test_curve_rejects_unknown_band_method(pareto_fit):
    with pytest.raises(InvalidInputError):
        return_level_curve(pareto_fit, [10.0], ci_method="jackknife")


def test_bootstrap_curve_is_reproducible(loss_sample):
    fit = hill(loss_sample, loss_sample.quantile(0.9))
    first = return_level_curve(fit, [50.0, 500.0], ci_method="bootstrap", n_boot=60)
    second = return_level_curve(fit, [50.0, 500.0], ci_method="bootstrap", n_boot=60)
    assert first == second
    for record in first.records:
        assert record.ci.lo < record.ci.hi
        assert record.ci.level == 0.95


# --- Pure premiums ---


def test_pure_premium_of_composed_pareto(pareto_fit):
    quote = pure_premium(pareto_fit, 20.0, claims_per_period=3.0)
    # P[Y > 20] = 0.1 * 0.25, e(20) = 20 / (alpha - 1)
    assert quote.exceed_prob == pytest.approx(0.025)
    assert quote.mean_excess_at_d == pytest.approx(20.0)
    assert quote.per_claim_premium == pytest.approx(0.5)
    assert quote.annual_premium == pytest.approx(1.5)


@pytest.mark.parametrize(
    "model", [Gpd(**GPD_1_1_2), Gpd(u=0.5, sigma=3.0, alpha=1.8), Epd(**EPD_SMOOTH)]
)
@pytest.mark.parametrize("offset", [0.0, 1.0, 10.0])
def test_pure_premium_matches_integrated_survival(model, offset):
    fit = _fit(model)
    d = model.u + offset
    expected, _ = integrate.quad(
        lambda y: float(survival(model, y)), d, np.inf, epsabs=1e-12, limit=500
    )
    quote = pure_premium(fit, d)
    assert quote.per_claim_premium == pytest.approx(fit.q_u * expected, rel=1e-6)


def test_pure_premium_refuses_deductibles_below_threshold(pareto_fit):
    with pytest.raises(ExtrapolationDomainError):
        pure_premium(pareto_fit, 5.0)


def test_pure_premium_rejects_negative_claim_counts(pareto_fit):
    with pytest.raises(InvalidInputError):
        pure_premium(pareto_fit, 20.0, claims_per_period=-1.0)


def test_pure_premium_needs_finite_mean():
    with pytest.raises(InfiniteMeanError):
        pure_premium(_fit(ParetoI(u=1.0, alpha=0.8)), 2.0)


def test_premium_quote_checks_its_own_arithmetic():
    with pytest.raises(ValueError):
        PremiumQuote(
            deductible=1.0,
            per_claim_premium=1.0,
            annual_premium=1.0,
            exceed_prob=0.5,
            mean_excess_at_d=1.0,
        )


def test_premium_curve_decreases_with_deductible(pareto_fit):
    curve = premium_curve(pareto_fit, [10.0, 20.0, 40.0], claims_per_period=2.0)
    assert curve.y == sorted(curve.y, reverse=True)
    assert curve.y[1] == pytest.approx(1.0)


def test_fitted_mean_excess_leaves_gaps_below_threshold(pareto_fit):
    series = fitted_mean_excess(pareto_fit, [5.0, 10.0, 30.0])
    assert series.y[0] is None
    assert series.y[1:] == pytest.approx([10.0, 30.0])


# --- Empirical mean excess and stability ---


def test_empirical_mean_excess():
    estimate = empirical_mean_excess(OrderedSample(values=np.arange(1.0, 11.0)), 7.0)
    assert estimate.value == pytest.approx(2.0)
    assert estimate.n_over == 3
    half = 1.959963984540054 / np.sqrt(3.0)
    assert estimate.ci.lo == pytest.approx(2.0 - half)
    assert estimate.ci.hi == pytest.approx(2.0 + half)


def test_empirical_mean_excess_needs_two_observations():
    with pytest.raises(InsufficientDataError):
        empirical_mean_excess(OrderedSample(values=np.arange(1.0, 11.0)), 9.0)


def test_premium_stability_reports_each_method(loss_sample):
    d = loss_sample.quantile(0.97)
    thresholds = [loss_sample.quantile(q) for q in (0.6, 0.75, 0.9)] + [d + 1.0]
    series = premium_stability(
        loss_sample,
        d,
        thresholds,
        claims_per_period=4.0,
        methods=(FitMethod.HILL, FitMethod.MLE_GPD),
    )
    assert set(series) == {"hill", "mle_gpd", "empirical"}
    for name in ("hill", "mle_gpd"):
        assert len(series[name]) == 3
        assert len(series[name].metadata["failures"]) == 1
        assert all(y > 0.0 for y in series[name].y)
    empirical = series["empirical"]
    assert len(empirical) == 4
    assert len(set(empirical.y)) == 1
    assert empirical.metadata["n_over"] == loss_sample.exceedances(d).size


# --- Simulation checks ---


@pytest.mark.slow
def test_pure_premium_matches_simulated_layer_losses():
    model = Gpd(u=1.0, sigma=2.0, alpha=4.0)
    fit = _fit(model, 100, 100)
    d = 4.0
    premium = pure_premium(fit, d).per_claim_premium
    # integral of ((x + 1) / 2)^-4 over [4, inf)
    assert premium == pytest.approx(2.0 / (3.0 * 2.5**3), rel=1e-9)
    layer = np.maximum(sample(model, 8, 2_000_000) - d, 0.0)
    standard_error = layer.std(ddof=1) / np.sqrt(layer.size)
    assert abs(layer.mean() - premium) < 5.0 * standard_error
