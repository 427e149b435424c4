"""
Return levels, return periods and excess-of-loss pure premiums.

Parametric quantities are read from a TailFit and refer to the composed law
P[Y > y] = q_u S(y) for y >= u. Empirical counterparts work on the raw sample.
"""

import logging
from typing import Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field, model_validator

from .core import FitMethod, Interval, OrderedSample, PlotSeries, TailFit
from .decorators import record_failures, requires_finite_mean
from .distributions import Gpd, ParetoI, inverse_survival, mean_excess, survival
from .distributions import sample as draw_sample
from .exceptions import (
    ExtrapolationDomainError,
    FitError,
    InsufficientDataError,
    InvalidInputError,
    SubThresholdError,
)
from .tail_estimation.fitting import fit_exceedances, fit_tail
from .tail_estimation.likelihood import gpd_fisher_information
from .utils.patterns import (
    DEFAULT_BOOTSTRAP_REPLICATES,
    DEFAULT_LEVEL,
    DEFAULT_SEED,
    ERROR_SUB_THRESHOLD,
    NOTE_DELTA_UNAVAILABLE,
)
from .utils.utils import check_probability, z_value

logger = logging.getLogger(__name__)


class PremiumQuote(BaseModel):
    """
    Pure premium of an excess-of-loss cover with deductible d.

    per_claim_premium = exceed_prob * mean_excess_at_d = E[(Y - d)+], and
    annual_premium scales it by the expected number of claims per period.
    """

    deductible: float
    per_claim_premium: float = Field(ge=0.0)
    annual_premium: float = Field(ge=0.0)
    exceed_prob: float = Field(ge=0.0, le=1.0)
    mean_excess_at_d: float = Field(ge=0.0)
    claims_per_period: float = Field(default=1.0, ge=0.0)

    @model_validator(mode="after")
    def _consistent(self) -> "PremiumQuote":
        expected = self.exceed_prob * self.mean_excess_at_d
        if not np.isclose(self.per_claim_premium, expected, rtol=1e-9, atol=0.0):
            raise ValueError(
                f"per_claim_premium={self.per_claim_premium} differs from {expected}"
            )
        annual = self.per_claim_premium * self.claims_per_period
        if not np.isclose(self.annual_premium, annual, rtol=1e-9, atol=0.0):
            raise ValueError(
                f"annual_premium={self.annual_premium} differs from {annual}"
            )
        return self


class ReturnLevelRecord(BaseModel):
    t: float = Field(gt=0.0)
    z: float
    ci: Optional[Interval] = None


class ReturnLevelCurve(BaseModel):
    records: List[ReturnLevelRecord]
    ci_method: Optional[str] = None
    level: Optional[float] = None
    notes: List[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def _monotone(self) -> "ReturnLevelCurve":
        pairs = sorted((r.t, r.z) for r in self.records)
        for (_, z_prev), (t, z) in zip(pairs, pairs[1:]):
            if z < z_prev:
                raise ValueError(f"Return level decreases at t={t}")
        return self

    def as_plot_series(self) -> PlotSeries:
        return PlotSeries(
            x=[r.t for r in self.records],
            y=[r.z for r in self.records],
            lo=[r.ci.lo if r.ci else None for r in self.records],
            hi=[r.ci.hi if r.ci else None for r in self.records],
            metadata={
                "x": "return_period",
                "y": "return_level",
                "ci_method": self.ci_method,
                "level": self.level,
                "notes": list(self.notes),
            },
        )


class MeanExcessEstimate(BaseModel):
    value: float
    ci: Interval
    n_over: int = Field(ge=2)


# --- Return levels and periods ---


def return_level(fit: TailFit, t: float) -> float:
    """
    Level z(t) exceeded on average once every t events.

    Solves q_u S(z) = 1 / t, which needs q_u t >= 1.

    Args:
        fit: Tail fit
        t: Return period, in events

    Returns:
        Return level z(t) >= u
    """
    if not t > 0.0:
        raise InvalidInputError(f"Return period must be positive, got {t}")
    scaled = fit.q_u * t
    if scaled < 1.0:
        raise SubThresholdError(
            ERROR_SUB_THRESHOLD.format(f"Return period t={t}", fit.u)
        )
    return float(inverse_survival(fit.model, 1.0 / scaled))


def return_period(fit: TailFit, z: float) -> float:
    """t = 1 / P[Y > z], the mean waiting time of a geometric first passage."""
    if z < fit.u:
        raise SubThresholdError(ERROR_SUB_THRESHOLD.format(f"Level z={z}", fit.u))
    return float(1.0 / (fit.q_u * survival(fit.model, z)))


def _delta_interval(fit: TailFit, t: float, z: float, level: float) -> Interval:
    # q_u is treated as known; only the tail parameters carry uncertainty
    model = fit.model
    log_scaled = np.log(fit.q_u * t)
    growth = np.exp(log_scaled / model.alpha)
    if isinstance(model, ParetoI):
        se = z * log_scaled / (model.alpha * np.sqrt(fit.n_exceed))
    else:
        grad = np.array(
            [growth - 1.0, -model.sigma * growth * log_scaled / model.alpha**2]
        )
        cov = np.linalg.inv(gpd_fisher_information(model)) / fit.n_exceed
        se = float(np.sqrt(grad @ cov @ grad))
    half = z_value(level) * float(se)
    return Interval(lo=z - half, hi=z + half, level=level)


def _replicate_levels(
    draws: np.ndarray, fit: TailFit, periods: np.ndarray
) -> List[float]:
    refitted = fit_exceedances(draws, fit.n_total, fit.u, fit.method, with_ci=False)
    return [return_level(refitted, float(t)) for t in periods]


def _bootstrap_levels(
    fit: TailFit, periods: np.ndarray, n_boot: int, seed: int
) -> np.ndarray:
    rng = np.random.default_rng(seed)
    replicate = record_failures("bootstrap")(_replicate_levels)
    levels = []
    for replicate_seed in rng.integers(0, 2**32, size=n_boot):
        draws = draw_sample(fit.model, int(replicate_seed), fit.n_exceed)
        row, _ = replicate(draws[draws > fit.u], fit, periods)
        if row is not None:
            levels.append(row)
    return np.asarray(levels, dtype=float).reshape(-1, periods.size)


def return_level_curve(
    fit: TailFit,
    periods: Sequence[float],
    level: float = DEFAULT_LEVEL,
    ci_method: Optional[str] = "delta",
    n_boot: int = DEFAULT_BOOTSTRAP_REPLICATES,
    seed: int = DEFAULT_SEED,
) -> ReturnLevelCurve:
    """
    Return levels over a grid of periods with optional confidence bands.

    ``delta`` propagates the expected information of a ParetoI or Gpd fit
    with q_u held fixed. Epd fits get no delta-method band. ``bootstrap``
    refits the same method to exceedances simulated from the fitted model
    and reports percentile intervals.

    Args:
        fit: Tail fit
        periods: Return periods, each with q_u t >= 1
        level: Confidence level
        ci_method: ``delta``, ``bootstrap`` or None
        n_boot: Bootstrap replicates
        seed: Bootstrap seed

    Returns:
        ReturnLevelCurve
    """
    check_probability(level, lower_open=True)
    periods_arr = np.sort(np.atleast_1d(np.asarray(periods, dtype=float)))
    levels = [return_level(fit, float(t)) for t in periods_arr]
    intervals: List[Optional[Interval]] = [None] * periods_arr.size
    notes: List[str] = []

    if ci_method == "delta":
        if isinstance(fit.model, (ParetoI, Gpd)):
            intervals = [
                _delta_interval(fit, float(t), z, level)
                for t, z in zip(periods_arr, levels)
            ]
        else:
            notes.append(NOTE_DELTA_UNAVAILABLE.format(fit.method.value))
    elif ci_method == "bootstrap":
        boot = _bootstrap_levels(fit, periods_arr, n_boot, seed)
        if boot.shape[0] < 2:
            raise FitError(
                f"Only {boot.shape[0]} of {n_boot} bootstrap refits succeeded",
                {"n_boot": n_boot},
            )
        if boot.shape[0] < n_boot:
            notes.append(f"{n_boot - boot.shape[0]} bootstrap refits failed")
        tails = [(1.0 - level) / 2.0, (1.0 + level) / 2.0]
        lo, hi = np.quantile(boot, tails, axis=0)
        intervals = [Interval(lo=a, hi=b, level=level) for a, b in zip(lo, hi)]
    elif ci_method is not None:
        raise InvalidInputError(f"Unknown ci_method {ci_method!r}")

    return ReturnLevelCurve(
        records=[
            ReturnLevelRecord(t=float(t), z=z, ci=ci)
            for t, z, ci in zip(periods_arr, levels, intervals)
        ],
        ci_method=ci_method,
        level=level if ci_method else None,
        notes=notes,
    )


# --- Premiums ---


@requires_finite_mean
def pure_premium(
    fit: TailFit, d: float, claims_per_period: float = 1.0
) -> PremiumQuote:
    """
    Pure premium E[(Y - d)+] of an excess-of-loss cover above the threshold.

    Args:
        fit: Tail fit with alpha > 1
        d: Deductible, at or above u
        claims_per_period: Expected number of claims per period

    Returns:
        PremiumQuote
    """
    if d < fit.u:
        raise ExtrapolationDomainError(
            ERROR_SUB_THRESHOLD.format(f"Deductible d={d}", fit.u)
        )
    if claims_per_period < 0.0:
        raise InvalidInputError(
            f"claims_per_period must be >= 0, got {claims_per_period}"
        )
    exceed_prob = fit.q_u * float(survival(fit.model, d))
    excess = mean_excess(fit.model, d)
    per_claim = exceed_prob * excess
    return PremiumQuote(
        deductible=d,
        per_claim_premium=per_claim,
        annual_premium=per_claim * claims_per_period,
        exceed_prob=exceed_prob,
        mean_excess_at_d=excess,
        claims_per_period=claims_per_period,
    )


def empirical_mean_excess(
    sample: OrderedSample, d: float, level: float = DEFAULT_LEVEL
) -> MeanExcessEstimate:
    """
    Average of x - d over the observations above d, with a normal interval.

    Args:
        sample: Ordered sample
        d: Level
        level: Confidence level

    Returns:
        MeanExcessEstimate
    """
    excess = sample.exceedances(d) - d
    if excess.size < 2:
        raise InsufficientDataError(
            f"Mean excess at d={d} needs 2 observations above d, got {excess.size}",
            diagnostics={"n_over": int(excess.size), "d": d},
        )
    value = float(excess.mean())
    half = z_value(level) * float(excess.std(ddof=1)) / np.sqrt(excess.size)
    return MeanExcessEstimate(
        value=value,
        ci=Interval(lo=value - half, hi=value + half, level=level),
        n_over=int(excess.size),
    )


def _premium_at(
    sample: OrderedSample,
    u: float,
    d: float,
    method: FitMethod,
    claims_per_period: float,
) -> PremiumQuote:
    if u > d:
        raise ExtrapolationDomainError(
            ERROR_SUB_THRESHOLD.format(f"Deductible d={d}", u)
        )
    fit = fit_tail(sample, u, method, with_ci=False)
    return pure_premium(fit, d, claims_per_period)


def premium_stability(
    sample: OrderedSample,
    d: float,
    thresholds: Sequence[float],
    claims_per_period: float = 1.0,
    methods: Sequence[FitMethod] = tuple(FitMethod),
) -> Dict[str, PlotSeries]:
    """
    Mean excess e(d) estimated from tail fits at a range of thresholds u <= d.

    One series per method plus an ``empirical`` reference that is flat in u.
    Premiums go to ``metadata["premiums"]`` and failing thresholds to
    ``metadata["failures"]``.

    Args:
        sample: Ordered sample
        d: Deductible
        thresholds: Candidate thresholds
        claims_per_period: Expected number of claims per period
        methods: Fit methods to compare

    Returns:
        Dict of PlotSeries keyed by method name and ``empirical``
    """
    out: Dict[str, PlotSeries] = {}
    for method in methods:
        method = FitMethod(method)
        quote_at = record_failures(method.value)(_premium_at)
        xs: List[float] = []
        ys: List[Optional[float]] = []
        premiums: List[float] = []
        failures: List[str] = []
        for u in thresholds:
            quote, notes = quote_at(sample, float(u), d, method, claims_per_period)
            if quote is None:
                failures.extend(f"u={u}: {note}" for note in notes)
                continue
            xs.append(float(u))
            ys.append(quote.mean_excess_at_d)
            premiums.append(quote.annual_premium)
        if failures:
            logger.warning(
                "premium_stability skipped %d %s fits", len(failures), method.value
            )
        out[method.value] = PlotSeries(
            x=xs,
            y=ys,
            metadata={
                "x": "threshold",
                "y": "mean_excess",
                "deductible": d,
                "premiums": premiums,
                "failures": failures,
            },
        )

    reference = empirical_mean_excess(sample, d)
    n_over = reference.n_over
    empirical_premium = n_over / sample.n * reference.value * claims_per_period
    xs = [float(u) for u in thresholds]
    out["empirical"] = PlotSeries(
        x=xs,
        y=[reference.value] * len(xs),
        lo=[reference.ci.lo] * len(xs),
        hi=[reference.ci.hi] * len(xs),
        metadata={
            "x": "threshold",
            "y": "mean_excess",
            "deductible": d,
            "premiums": [empirical_premium] * len(xs),
            "n_over": n_over,
        },
    )
    return out


@requires_finite_mean
def fitted_mean_excess(fit: TailFit, d_grid: Sequence[float]) -> PlotSeries:
    """Parametric mean excess e(d) of the fitted tail; levels below u are gaps."""
    ys: List[Optional[float]] = []
    for d in d_grid:
        ys.append(mean_excess(fit.model, float(d)) if d >= fit.u else None)
    return PlotSeries(
        x=[float(d) for d in d_grid],
        y=ys,
        metadata={"x": "d", "y": "mean_excess", "method": fit.method.value},
    )


def premium_curve(
    fit: TailFit, deductibles: Sequence[float], claims_per_period: float = 1.0
) -> PlotSeries:
    """Annual pure premium against the deductible."""
    quotes = [pure_premium(fit, float(d), claims_per_period) for d in deductibles]
    return PlotSeries(
        x=[q.deductible for q in quotes],
        y=[q.annual_premium for q in quotes],
        metadata={
            "x": "deductible",
            "y": "annual_premium",
            "per_claim": [q.per_claim_premium for q in quotes],
            "claims_per_period": claims_per_period,
        },
    )
