"""
Hill estimation of the tail index, Hill plots and Hill-based quantile intervals.
"""

import logging
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, Field

from ..core import FitMethod, Interval, OrderedSample, PlotSeries, TailFit
from ..distributions import ParetoI
from ..exceptions import ExtrapolationDomainError, InvalidInputError
from ..utils.patterns import DEFAULT_LEVEL, ERROR_EXTRAPOLATION, MIN_HILL_EXCEEDANCES
from ..utils.utils import check_probability, z_value
from . import TailEstimator

logger = logging.getLogger(__name__)


class HillEstimator(TailEstimator):
    """
    Strict Pareto maximum likelihood: alpha = 1 / mean(log(x / u)) over x > u.
    """

    method = FitMethod.HILL
    min_exceedances = MIN_HILL_EXCEEDANCES

    def fit_exceedances(
        self,
        exceedances: np.ndarray,
        n_total: int,
        u: float,
        level: float = DEFAULT_LEVEL,
        with_ci: bool = True,
    ) -> TailFit:
        if not u > 0.0:
            raise InvalidInputError(f"Hill estimation needs u > 0, got {u}")
        x = self.check_exceedances(exceedances, u)
        n_u = x.size
        log_x = np.log(x)
        alpha = 1.0 / (float(np.mean(log_x)) - np.log(u))
        loglik = (
            n_u * np.log(alpha) + n_u * alpha * np.log(u) - (alpha + 1.0) * log_x.sum()
        )
        ci = None
        if with_ci:
            half = z_value(level) * alpha / np.sqrt(n_u)
            ci = Interval(lo=max(alpha - half, 0.0), hi=alpha + half, level=level)
        logger.debug("Hill fit u=%s n_u=%d alpha=%.6g", u, n_u, alpha)
        return TailFit(
            model=ParetoI(u=u, alpha=alpha),
            u=u,
            n_exceed=n_u,
            n_total=n_total,
            q_u=n_u / n_total,
            loglik=float(loglik),
            alpha_ci=ci,
            method=self.method,
        )


def hill(sample: OrderedSample, u: float, level: float = DEFAULT_LEVEL) -> TailFit:
    """
    Hill estimate of alpha from the observations strictly above u.

    Args:
        sample: Ordered sample
        u: Positive threshold
        level: Confidence level of the Gaussian interval alpha +- z alpha / sqrt(n_u)

    Returns:
        TailFit with a ParetoI(u, alpha) model
    """
    return HillEstimator().fit(sample, u, level)


class HillRecord(BaseModel):
    k: int = Field(ge=2)  # number of top observations used
    threshold: float  # the (k+1)-th largest observation
    alpha_hat: Optional[float]  # None when the top k tie with the threshold
    ci: Optional[Interval]


class HillSeries(BaseModel):
    records: List[HillRecord]

    def as_plot_series(self) -> PlotSeries:
        return PlotSeries(
            x=[float(r.k) for r in self.records],
            y=[r.alpha_hat for r in self.records],
            lo=[r.ci.lo if r.ci else None for r in self.records],
            hi=[r.ci.hi if r.ci else None for r in self.records],
            metadata={
                "x": "k",
                "y": "alpha_hat",
                "thresholds": [r.threshold for r in self.records],
            },
        )


def hill_series(sample: OrderedSample, level: float = DEFAULT_LEVEL) -> HillSeries:
    """
    Hill estimates for k = 2, ..., n - 1 top observations.

    The threshold for k is the (k+1)-th largest observation.
    """
    n = sample.n
    if n < 3:
        raise InvalidInputError(f"hill_series needs n >= 3, got {n}")
    z = z_value(level)
    log_desc = np.log(sample.values[::-1])
    ks = np.arange(2, n)
    mean_top = np.cumsum(log_desc)[ks - 1] / ks
    gaps = mean_top - log_desc[ks]

    records = []
    for k, gap, log_u in zip(ks, gaps, log_desc[ks]):
        threshold = float(np.exp(log_u))
        if gap > 0.0:
            alpha = 1.0 / gap
            half = z * alpha / np.sqrt(k)
            ci = Interval(lo=max(alpha - half, 0.0), hi=alpha + half, level=level)
            records.append(
                HillRecord(k=int(k), threshold=threshold, alpha_hat=alpha, ci=ci)
            )
        else:
            records.append(
                HillRecord(k=int(k), threshold=threshold, alpha_hat=None, ci=None)
            )
    return HillSeries(records=records)


def quantile_ci_hill(
    sample: OrderedSample, u: float, p: float, level: float = DEFAULT_LEVEL
) -> Interval:
    """
    Delta-method interval for the composed Pareto quantile Q(1 - p).

    The point estimate is u (p / q_u)^(-1/alpha); its standard error is
    Q sqrt(1 + log(q_u / p)^2) / (alpha sqrt(n_u)).

    Args:
        sample: Ordered sample
        u: Threshold
        p: Exceedance probability, below q_u
        level: Confidence level

    Returns:
        Symmetric Interval around the point estimate
    """
    check_probability(p, lower_open=True)
    fit = hill(sample, u, level)
    if not p < fit.q_u:
        raise ExtrapolationDomainError(ERROR_EXTRAPOLATION.format(p, fit.q_u))
    alpha = fit.alpha
    ratio = fit.q_u / p
    q = u * ratio ** (1.0 / alpha)
    se = q * np.sqrt(1.0 + np.log(ratio) ** 2) / (alpha * np.sqrt(fit.n_exceed))
    half = z_value(level) * se
    return Interval(lo=q - half, hi=q + half, level=level)
