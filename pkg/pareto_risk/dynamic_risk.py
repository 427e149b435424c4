"""
Volatility-filtered value-at-risk and expected shortfall for return series.

Values are treated as losses: large positive values are the risky tail. Use
ReturnSeries.negated() to study the lower tail of returns.

The two-step pipeline filters the series with EWMA or GARCH(1,1), fits a
tail model to the standardized residuals above a positive threshold and
rescales the residual VaR and ES by the filtered volatility at each date.
"""

import logging
from typing import Any, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy import signal, special, stats

from .core import FilterKind, Interval, ModelKind, PlotSeries, TailFit
from .decorators import record_failures
from .exceptions import (
    FitError,
    InsufficientDataError,
    InvalidInputError,
    NumericalError,
)
from .numerics import minimize
from .risk_measures import ComposedTail, es_composed, var_composed
from .tail_estimation.fitting import fit_exceedances
from .utils.patterns import (
    BACKTEST_BAND_LEVEL,
    DEFAULT_EWMA_BETA,
    DEFAULT_HALF_WIDTH,
    DEFAULT_RESIDUAL_LEVEL,
    ERROR_ALL_STARTS_FAILED,
    ERROR_MISALIGNED,
    GARCH_LOG_OMEGA_BOUNDS,
    GARCH_PERSISTENCE_BOUNDARY,
    GARCH_START_GRID,
    MIN_GARCH_LENGTH,
    NOTE_BOUNDARY_SOLUTION,
    NOTE_TRUNCATED_WINDOW,
    PRESAMPLE_VARIANCE_LENGTH,
)
from .utils.utils import check_probability, resolve_threshold

logger = logging.getLogger(__name__)

_ARRAY_CONFIG = ConfigDict(arbitrary_types_allowed=True, frozen=True)


def _read_only(values: Any) -> np.ndarray:
    arr = np.array(values, dtype=float).ravel()
    arr.setflags(write=False)
    return arr


class ReturnSeries(BaseModel):
    """
    Log-returns y_t indexed by strictly increasing timestamps.

    Timestamps may be numbers or numpy datetimes.
    """

    model_config = _ARRAY_CONFIG

    timestamps: np.ndarray
    returns: np.ndarray

    @field_validator("timestamps", mode="before")
    @classmethod
    def _ordered(cls, value: Any) -> np.ndarray:
        arr = np.array(value).ravel()
        if arr.size > 1 and not np.all(arr[1:] > arr[:-1]):
            raise ValueError("Timestamps must be strictly increasing")
        arr.setflags(write=False)
        return arr

    @field_validator("returns", mode="before")
    @classmethod
    def _finite(cls, value: Any) -> np.ndarray:
        arr = _read_only(value)
        if arr.size < 1:
            raise ValueError("ReturnSeries needs at least one return")
        if not np.all(np.isfinite(arr)):
            raise ValueError("Returns must be finite")
        return arr

    @model_validator(mode="after")
    def _aligned(self) -> "ReturnSeries":
        if self.timestamps.size != self.returns.size:
            raise ValueError(
                ERROR_MISALIGNED.format(self.timestamps.size, self.returns.size)
            )
        return self

    @classmethod
    def from_returns(cls, returns: Any) -> "ReturnSeries":
        """Series indexed 0, 1, ..., T - 1."""
        arr = np.asarray(returns, dtype=float).ravel()
        return cls(timestamps=np.arange(arr.size), returns=arr)

    def __len__(self) -> int:
        return int(self.returns.size)

    def negated(self) -> "ReturnSeries":
        return ReturnSeries(timestamps=self.timestamps, returns=-self.returns)

    def scaled(self, factor: float) -> "ReturnSeries":
        return ReturnSeries(timestamps=self.timestamps, returns=factor * self.returns)

    def time_axis(self) -> Tuple[List[float], Optional[List[str]]]:
        """Plot abscissae, plus string labels when timestamps are not numeric."""
        if np.issubdtype(self.timestamps.dtype, np.number):
            return self.timestamps.astype(float).tolist(), None
        return np.arange(len(self), dtype=float).tolist(), [
            str(ts) for ts in self.timestamps
        ]


class GarchParams(BaseModel):
    """
    GARCH(1,1) coefficients of sigma^2_{t+1} = alpha0 + alpha1 e_t^2 + beta1 sigma^2_t.

    Stationarity requires alpha1 + beta1 < 1.
    """

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    alpha0: float = Field(gt=0.0)
    alpha1: float = Field(ge=0.0)
    beta1: float = Field(ge=0.0)

    @model_validator(mode="after")
    def _stationary(self) -> "GarchParams":
        if not self.alpha1 + self.beta1 < 1.0:
            raise ValueError(
                f"alpha1 + beta1 = {self.alpha1 + self.beta1} must stay below 1"
            )
        return self

    @property
    def persistence(self) -> float:
        return self.alpha1 + self.beta1

    @property
    def unconditional_variance(self) -> float:
        return self.alpha0 / (1.0 - self.persistence)


class VolSeries(BaseModel):
    """Filtered volatilities sigma_1..sigma_T and the forecast sigma_{T+1}."""

    model_config = _ARRAY_CONFIG

    sigma: np.ndarray
    forecast: float = Field(gt=0.0)

    @field_validator("sigma", mode="before")
    @classmethod
    def _positive(cls, value: Any) -> np.ndarray:
        arr = _read_only(value)
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
            raise ValueError("Volatilities must be finite and positive")
        return arr

    def __len__(self) -> int:
        return int(self.sigma.size)


class GarchFit(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    params: GarchParams
    mu: float
    vol: VolSeries
    loglik: float
    at_boundary: bool = False
    notes: List[str] = Field(default_factory=list)


class DynamicRisk(BaseModel):
    """Dynamic VaR and ES series with the residual tail fit behind them."""

    var: PlotSeries
    es: PlotSeries
    residual_fit: TailFit
    mu: float
    var_residual: float
    es_residual: float
    forecast_var: float
    forecast_es: float
    garch: Optional[GarchFit] = None


class BacktestReport(BaseModel):
    violations: int = Field(ge=0)
    n: int = Field(ge=1)
    rate: float = Field(ge=0.0, le=1.0)
    expected: float
    band: Interval
    kupiec_pvalue: float = Field(ge=0.0, le=1.0)

    @property
    def within_band(self) -> bool:
        return self.band.contains(self.violations)


# --- Filters ---


def _presample_variance(centered: np.ndarray) -> float:
    head = centered[:PRESAMPLE_VARIANCE_LENGTH]
    value = float(np.mean(head**2))
    if value <= 0.0:
        value = float(np.mean(centered**2))
    if value <= 0.0:
        raise InvalidInputError("Cannot initialize the variance of a constant series")
    return value


def _variance_recursion(
    squared: np.ndarray, omega: float, a1: float, b1: float, s1: float
) -> np.ndarray:
    # s_{t+1} = (omega + a1 e_t^2) + b1 s_t, returned as s_1..s_{T+1}
    drive = omega + a1 * squared
    tail, _ = signal.lfilter([1.0], [1.0, -b1], drive, zi=[b1 * s1])
    return np.concatenate(([s1], tail))


def _vol_series(variances: np.ndarray) -> VolSeries:
    return VolSeries(
        sigma=np.sqrt(variances[:-1]), forecast=float(np.sqrt(variances[-1]))
    )


def garch_filter(
    series: ReturnSeries,
    params: GarchParams,
    mu: float = 0.0,
    sigma0_sq: Optional[float] = None,
) -> VolSeries:
    """
    Run the GARCH(1,1) variance recursion over the centered returns.

    Args:
        series: Return series
        params: GARCH parameters
        mu: Constant mean
        sigma0_sq: Variance of the first date; presample variance when omitted

    Returns:
        VolSeries aligned to the series
    """
    centered = series.returns - mu
    s1 = _presample_variance(centered) if sigma0_sq is None else float(sigma0_sq)
    variances = _variance_recursion(
        centered**2, params.alpha0, params.alpha1, params.beta1, s1
    )
    return _vol_series(variances)


def ewma_vol(
    series: ReturnSeries,
    beta: float = DEFAULT_EWMA_BETA,
    sigma0: Optional[float] = None,
) -> VolSeries:
    """
    Exponentially weighted volatility.

    sigma^2_{t+1} = beta sigma^2_t + (1 - beta) y_t^2 with sigma_1 = sigma0.

    Args:
        series: Return series
        beta: Smoothing weight in (0, 1)
        sigma0: Volatility of the first date; presample value when omitted

    Returns:
        VolSeries whose forecast is sigma_{T+1}
    """
    check_probability(beta, lower_open=True)
    s1 = _presample_variance(series.returns) if sigma0 is None else float(sigma0) ** 2
    variances = _variance_recursion(series.returns**2, 0.0, 1.0 - beta, beta, s1)
    return _vol_series(variances)


def garch_loglik(
    series: ReturnSeries,
    params: GarchParams,
    mu: float = 0.0,
    sigma0_sq: Optional[float] = None,
) -> float:
    """Gaussian quasi log-likelihood of the series under the GARCH filter."""
    vol = garch_filter(series, params, mu, sigma0_sq)
    return _gaussian_loglik(series.returns - mu, vol.sigma**2)


def _gaussian_loglik(centered: np.ndarray, variances: np.ndarray) -> float:
    return float(
        -0.5 * np.sum(np.log(2.0 * np.pi) + np.log(variances) + centered**2 / variances)
    )


def fit_garch11(series: ReturnSeries) -> GarchFit:
    """
    Gaussian quasi-maximum likelihood for GARCH(1,1) with a constant mean.

    The search runs over (log(alpha0 / var), alpha1, beta1) from several
    starting points. Stationarity is enforced by rejecting alpha1 + beta1 >= 1.
    Persistence within 1e-4 of one, or a coefficient pinned at zero, is
    reported as a boundary solution.

    Args:
        series: At least 100 returns

    Returns:
        GarchFit
    """
    if len(series) < MIN_GARCH_LENGTH:
        raise InsufficientDataError(
            f"GARCH(1,1) needs at least {MIN_GARCH_LENGTH} returns, got {len(series)}",
            diagnostics={"n": len(series)},
        )
    mu = float(np.mean(series.returns))
    centered = series.returns - mu
    squared = centered**2
    scale = float(np.mean(squared))
    if scale <= 0.0:
        raise FitError("GARCH(1,1) cannot be fitted to a constant series")
    s1 = _presample_variance(centered)

    def negative_loglik(theta: np.ndarray) -> float:
        log_omega, a1, b1 = theta
        if a1 < 0.0 or b1 < 0.0 or a1 + b1 >= 1.0:
            return np.inf
        variances = _variance_recursion(squared, scale * np.exp(log_omega), a1, b1, s1)
        return -_gaussian_loglik(centered, variances[:-1])

    bounds = [GARCH_LOG_OMEGA_BOUNDS, (0.0, 1.0), (0.0, 1.0)]
    best = None
    failures = 0
    for a1, b1 in GARCH_START_GRID:
        x0 = (float(np.log(1.0 - a1 - b1)), a1, b1)
        try:
            res = minimize(negative_loglik, x0, bounds=bounds, step=(0.5, 0.02, 0.02))
        except NumericalError as exc:
            failures += 1
            logger.debug("GARCH start (%s, %s) failed: %s", a1, b1, exc)
            continue
        if best is None or res.objective < best.objective:
            best = res
    if best is None:
        raise FitError(
            ERROR_ALL_STARTS_FAILED.format(len(GARCH_START_GRID)),
            {"failures": failures},
        )

    log_omega, a1, b1 = best.argmin
    params = GarchParams(alpha0=scale * float(np.exp(log_omega)), alpha1=a1, beta1=b1)
    notes = []
    if params.persistence > GARCH_PERSISTENCE_BOUNDARY:
        notes.append(NOTE_BOUNDARY_SOLUTION.format(f"persistence={params.persistence}"))
    if min(a1, b1) <= 1e-8:
        notes.append(NOTE_BOUNDARY_SOLUTION.format(f"alpha1={a1}, beta1={b1}"))
    for note in notes:
        logger.warning(note)
    vol = garch_filter(series, params, mu, s1)
    return GarchFit(
        params=params,
        mu=mu,
        vol=vol,
        loglik=-best.objective,
        at_boundary=bool(notes),
        notes=notes,
    )


def residuals(series: ReturnSeries, mu: float, vol: VolSeries) -> np.ndarray:
    """Standardized residuals x_t = (y_t - mu) / sigma_t."""
    if len(vol) != len(series):
        raise InvalidInputError(ERROR_MISALIGNED.format(len(series), len(vol)))
    return (series.returns - mu) / vol.sigma


# --- Two-step VaR and ES ---


def _residual_tail(
    x: np.ndarray,
    model_kind: ModelKind,
    tail_u: Optional[float],
    tail_level: Optional[float],
) -> ComposedTail:
    u = resolve_threshold(x, tail_u, None if tail_u is not None else tail_level)
    if not u > 0.0:
        raise InvalidInputError(f"Residual tail threshold must be positive, got {u}")
    fit = fit_exceedances(
        x[x > u], x.size, u, ModelKind(model_kind).fit_method, with_ci=False
    )
    body = x[x <= u]
    if body.size == 0:
        raise InvalidInputError(f"No residuals at or below u={u}")
    return ComposedTail(
        fit=fit, body_mean=float(body.mean()), sample_mean=float(x.mean())
    )


def filtered_var_es(
    series: ReturnSeries,
    mu: float,
    vol: VolSeries,
    p: float,
    model_kind: ModelKind = ModelKind.GPD,
    tail_u: Optional[float] = None,
    tail_level: float = DEFAULT_RESIDUAL_LEVEL,
) -> DynamicRisk:
    """
    VaR_t = mu + sigma_t VaR_X(p) and ES_t = mu + sigma_t ES_X(p).

    The residual tail is fitted once on all standardized residuals above
    ``tail_u``, or above their ``tail_level`` empirical quantile.

    Args:
        series: Return series
        mu: Constant mean
        vol: Filtered volatility aligned to the series
        p: Exceedance probability, below the residual tail fraction
        model_kind: Residual tail model
        tail_u: Absolute residual threshold
        tail_level: Quantile level of the residual threshold

    Returns:
        DynamicRisk
    """
    check_probability(p, lower_open=True)
    x = residuals(series, mu, vol)
    ct = _residual_tail(x, model_kind, tail_u, tail_level)
    var_x = var_composed(ct, p)
    es_x = es_composed(ct, p)
    xs, labels = series.time_axis()
    metadata = {"p": p, "mu": mu, "u": ct.fit.u, "method": ct.fit.method.value}
    if labels is not None:
        metadata["timestamps"] = labels
    return DynamicRisk(
        var=PlotSeries(
            x=xs, y=(mu + vol.sigma * var_x).tolist(), metadata={**metadata, "y": "var"}
        ),
        es=PlotSeries(
            x=xs, y=(mu + vol.sigma * es_x).tolist(), metadata={**metadata, "y": "es"}
        ),
        residual_fit=ct.fit,
        mu=mu,
        var_residual=var_x,
        es_residual=es_x,
        forecast_var=mu + vol.forecast * var_x,
        forecast_es=mu + vol.forecast * es_x,
    )


def dynamic_var_es(
    series: ReturnSeries,
    filter_kind: FilterKind = FilterKind.GARCH,
    p: float = 0.01,
    model_kind: ModelKind = ModelKind.GPD,
    tail_u: Optional[float] = None,
    tail_level: float = DEFAULT_RESIDUAL_LEVEL,
    ewma_beta: float = DEFAULT_EWMA_BETA,
) -> DynamicRisk:
    """
    Filter the series, then run the two-step VaR and ES.

    EWMA uses mu = 0. GARCH uses the fitted constant mean.
    """
    filter_kind = FilterKind(filter_kind)
    garch = None
    if filter_kind is FilterKind.EWMA:
        mu, vol = 0.0, ewma_vol(series, ewma_beta)
    else:
        garch = fit_garch11(series)
        mu, vol = garch.mu, garch.vol
    logger.info("Filtered %d returns with %s", len(series), filter_kind.value)
    result = filtered_var_es(series, mu, vol, p, model_kind, tail_u, tail_level)
    if garch is not None:
        result = result.model_copy(update={"garch": garch})
    return result


# --- Sliding windows ---


def _window_bounds(t: int, half_width: int, n: int, edge: str) -> Tuple[int, int]:
    lo, hi = t - half_width, t + half_width + 1
    if edge == "shift":
        if lo < 0:
            lo, hi = 0, 2 * half_width + 1
        elif hi > n:
            lo, hi = n - 2 * half_width - 1, n
        return lo, hi
    return max(lo, 0), min(hi, n)


def _window_var(
    values: np.ndarray,
    p: float,
    model_kind: ModelKind,
    tail_u: Optional[float],
    tail_level: float,
) -> float:
    ct = _residual_tail(values, model_kind, tail_u, tail_level)
    return var_composed(ct, p)


def sliding_window_fit(
    series: ReturnSeries,
    half_width: int = DEFAULT_HALF_WIDTH,
    tail_level: float = DEFAULT_RESIDUAL_LEVEL,
    p: float = 0.01,
    model_kind: ModelKind = ModelKind.GPD,
    tail_u: Optional[float] = None,
    edge: str = "truncate",
) -> PlotSeries:
    """
    Unconditional VaR from tail fits on the window [t - h, t + h] around each date.

    ``edge="truncate"`` clips windows at the ends of the series and flags
    them in ``metadata["truncated"]``. ``edge="shift"`` keeps every window at
    full length by sliding it inward. Windows whose fit fails become gaps
    listed in ``metadata["failures"]``.

    Args:
        series: Return series of at least 2 h + 1 values
        half_width: Half width h
        tail_level: Quantile level of the per-window threshold
        p: Exceedance probability
        model_kind: Tail model
        tail_u: Fixed absolute threshold instead of a per-window quantile
        edge: ``truncate`` or ``shift``

    Returns:
        PlotSeries of VaR against time
    """
    n = len(series)
    if half_width < 1 or n < 2 * half_width + 1:
        raise InvalidInputError(
            f"sliding_window_fit needs n >= 2 h + 1, got n={n}, h={half_width}"
        )
    if edge not in ("truncate", "shift"):
        raise InvalidInputError(f"Unknown edge handling {edge!r}")
    check_probability(p, lower_open=True)

    window_var = record_failures("window")(_window_var)
    ys: List[Optional[float]] = []
    truncated: List[bool] = []
    failures: List[str] = []
    cache = {}
    for t in range(n):
        lo, hi = _window_bounds(t, half_width, n, edge)
        truncated.append(hi - lo < 2 * half_width + 1)
        if (lo, hi) not in cache:
            cache[(lo, hi)] = window_var(
                series.returns[lo:hi], p, model_kind, tail_u, tail_level
            )
        value, notes = cache[(lo, hi)]
        ys.append(value)
        if value is None:
            failures.extend(f"t={t}: {note}" for note in notes)
    if failures:
        logger.warning("sliding_window_fit left %d gaps", sum(v is None for v in ys))

    xs, labels = series.time_axis()
    metadata = {
        "x": "time",
        "y": "var",
        "half_width": half_width,
        "edge": edge,
        "p": p,
        "truncated": truncated,
        "failures": failures,
        "notes": [NOTE_TRUNCATED_WINDOW] if any(truncated) else [],
    }
    if labels is not None:
        metadata["timestamps"] = labels
    return PlotSeries(x=xs, y=ys, metadata=metadata)


# --- Gaussian benchmark and backtesting ---


def gaussian_var_es(mu: float, sigma: float, p: float) -> Tuple[float, float]:
    """
    Normal VaR mu + z sigma and ES mu + phi(z) sigma / p with z = Phi^-1(1 - p).
    """
    check_probability(p, lower_open=True)
    if not sigma > 0.0:
        raise InvalidInputError(f"sigma must be positive, got {sigma}")
    z = float(stats.norm.isf(p))
    return mu + z * sigma, mu + float(stats.norm.pdf(z)) * sigma / p


def backtest(
    var_series: PlotSeries,
    series: ReturnSeries,
    p: float,
    level: float = BACKTEST_BAND_LEVEL,
) -> BacktestReport:
    """
    Count dates where the loss exceeds the VaR forecast.

    Gaps in the VaR series are skipped. The band holds the central ``level``
    binomial range of the violation count, and the Kupiec test compares the
    observed violation rate with p.

    Args:
        var_series: VaR per date, aligned to the series
        series: Realized values
        p: Nominal exceedance probability
        level: Band level

    Returns:
        BacktestReport
    """
    check_probability(p, lower_open=True)
    if len(var_series) != len(series):
        raise InvalidInputError(ERROR_MISALIGNED.format(len(var_series), len(series)))
    var_values = np.array(
        [np.nan if v is None else v for v in var_series.y], dtype=float
    )
    valid = ~np.isnan(var_values)
    n = int(valid.sum())
    if n == 0:
        raise InvalidInputError("The VaR series has no values to backtest")
    hits = int(np.sum(series.returns[valid] > var_values[valid]))
    tails = [(1.0 - level) / 2.0, (1.0 + level) / 2.0]
    lo, hi = stats.binom.ppf(tails, n, p)

    rate = hits / n
    log_null = special.xlogy(n - hits, 1.0 - p) + special.xlogy(hits, p)
    log_alt = special.xlogy(n - hits, 1.0 - rate) + special.xlogy(hits, rate)
    statistic = max(-2.0 * (log_null - log_alt), 0.0)
    return BacktestReport(
        violations=hits,
        n=n,
        rate=rate,
        expected=n * p,
        band=Interval(lo=float(lo), hi=float(hi), level=level),
        kupiec_pvalue=float(stats.chi2.sf(statistic, 1)),
    )


def simulate_garch11(
    params: GarchParams,
    n: int,
    seed: int,
    mu: float = 0.0,
    innovations: Optional[np.ndarray] = None,
    sigma0_sq: Optional[float] = None,
) -> Tuple[ReturnSeries, np.ndarray]:
    """
    Simulate y_t = mu + sigma_t x_t under GARCH(1,1).

    Args:
        params: GARCH parameters
        n: Length
        seed: Seed for the default Gaussian innovations
        mu: Constant mean
        innovations: Standardized innovations x_1..x_n to use instead
        sigma0_sq: Initial variance; the stationary variance when omitted

    Returns:
        Tuple of (series, volatilities sigma_1..sigma_n)
    """
    if innovations is None:
        innovations = np.random.default_rng(seed).standard_normal(n)
    innovations = np.asarray(innovations, dtype=float)
    if innovations.size != n:
        raise InvalidInputError(ERROR_MISALIGNED.format(n, innovations.size))
    s = params.unconditional_variance if sigma0_sq is None else float(sigma0_sq)
    sigma = np.empty(n)
    returns = np.empty(n)
    for t in range(n):
        sigma[t] = np.sqrt(s)
        e = sigma[t] * innovations[t]
        returns[t] = mu + e
        s = params.alpha0 + params.alpha1 * e**2 + params.beta1 * s
    return ReturnSeries.from_returns(returns), sigma
