"""
Value-at-risk, expected shortfall, top shares and Lorenz curves.

Unconditional measures take a tail model. Composed measures take a
ComposedTail, that is a TailFit above u together with the empirical body
below u, and are valid for exceedance probabilities up to q_u.
"""

import logging
import math
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, model_validator

from .core import MeanEstimator, OrderedSample, PlotSeries, TailFit
from .decorators import requires_finite_mean
from .distributions import (
    Gpd,
    ParetoI,
    TailModel,
    inverse_survival,
    mean,
    tail_mean,
)
from .exceptions import ExtrapolationDomainError, InvalidInputError
from .numerics import incomplete_beta, integrate_finite
from .utils.patterns import DEFAULT_P_LEVELS, ERROR_EXTRAPOLATION
from .utils.utils import check_probability

logger = logging.getLogger(__name__)


class ComposedTail(BaseModel):
    """
    Empirical body below u glued to a parametric tail above u.

    ``body_sample`` may be omitted when only the body mean is known.
    ``sample_mean`` is the plain mean of the full sample, used by the
    ``sample`` mean estimator.
    """

    fit: TailFit
    body_sample: Optional[OrderedSample] = None
    body_mean: float
    sample_mean: Optional[float] = None

    @model_validator(mode="after")
    def _consistent(self) -> "ComposedTail":
        if not 0.0 < self.fit.q_u < 1.0:
            raise ValueError(f"q_u={self.fit.q_u} must lie in (0, 1)")
        if self.body_sample is not None:
            if self.body_sample.values[-1] > self.fit.u:
                raise ValueError("Body observations must not exceed u")
            if not math.isclose(
                self.body_mean, self.body_sample.mean(), rel_tol=1e-9, abs_tol=1e-12
            ):
                raise ValueError(
                    f"body_mean={self.body_mean} differs from the body sample mean"
                )
        return self

    @classmethod
    def from_sample(cls, sample: OrderedSample, fit: TailFit) -> "ComposedTail":
        body = sample.at_or_below(fit.u)
        if body.size == 0:
            raise InvalidInputError(f"No observations at or below u={fit.u}")
        return cls(
            fit=fit,
            body_sample=OrderedSample(values=body),
            body_mean=float(np.mean(body)),
            sample_mean=sample.mean(),
        )

    @property
    def model(self) -> TailModel:
        return self.fit.model

    @property
    def q_u(self) -> float:
        return self.fit.q_u


# --- Unconditional measures ---


def var(model: TailModel, p: float) -> float:
    """VaR(p) = Q(1 - p), the level exceeded with probability p."""
    check_probability(p, lower_open=True)
    return float(inverse_survival(model, p))


@requires_finite_mean
def expected_shortfall(model: TailModel, p: float) -> float:
    """
    ES(p) = E[X | X > Q(1 - p)], the average of the worst p-fraction of losses.

    Args:
        model: Tail model with alpha > 1
        p: Exceedance probability in (0, 1)

    Returns:
        Expected shortfall
    """
    return float(tail_mean(model, var(model, p)))


@requires_finite_mean
def top_share(model: TailModel, p: float) -> float:
    """
    Share of the total mean carried by the top p-fraction of losses.

    TS(p) = p ES(p) / E[X]. Strict Pareto uses p^((alpha-1)/alpha); the
    other models integrate the quantile function over the top p-fraction.
    The singularity of Q at 1 is removed by substituting w = p t^m with
    m > alpha / (alpha - 1), which makes the integrand vanish at t = 0.

    Args:
        model: Tail model with alpha > 1
        p: Fraction in [0, 1]

    Returns:
        Top share in [0, 1]
    """
    check_probability(p, upper_open=False)
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    if isinstance(model, ParetoI):
        return float(p ** ((model.alpha - 1.0) / model.alpha))

    m = model.alpha / (model.alpha - 1.0) + 1.0

    def integrand(t: float) -> float:
        w = p * t**m
        if w <= 0.0:
            return 0.0
        return float(inverse_survival(model, w)) * p * m * t ** (m - 1.0)

    result = integrate_finite(integrand, 0.0, 1.0)
    return float(min(result.value / mean(model), 1.0))


@requires_finite_mean
def lorenz(model: TailModel, grid: Sequence[float]) -> PlotSeries:
    """Lorenz curve L(v) = 1 - TS(1 - v) on a grid of v in [0, 1]."""
    grid_arr, _ = check_probability(np.atleast_1d(grid), upper_open=False)
    values = [1.0 - top_share(model, 1.0 - float(v)) for v in grid_arr]
    return PlotSeries(
        x=grid_arr.tolist(),
        y=values,
        metadata={"x": "v", "y": "lorenz", "model": model.model_dump()},
    )


def empirical_top_share(sample: OrderedSample, p: float) -> float:
    """
    Sum of the top ceil(n p) observations over the sample sum.

    Args:
        sample: Ordered sample
        p: Fraction in (0, 1]

    Returns:
        Empirical top share
    """
    check_probability(p, upper_open=False)
    k = math.ceil(sample.n * p - 1e-9)
    if not 1 <= k <= sample.n:
        raise InvalidInputError(f"Top set of size {k} is empty for n={sample.n}, p={p}")
    return float(sample.values[-k:].sum() / sample.values.sum())


def max_sum_ratio(sample: OrderedSample) -> float:
    """M_n / S_n, which stays away from zero when the mean is infinite."""
    return float(sample.values[-1] / sample.values.sum())


@requires_finite_mean
def risk_curve(
    model: TailModel, p_grid: Sequence[float] = DEFAULT_P_LEVELS
) -> PlotSeries:
    """
    Expected shortfall against value-at-risk over a grid of probabilities.

    For a strict Pareto tail the points lie on the line ES = alpha/(alpha-1) VaR.
    """
    p_arr, _ = check_probability(np.atleast_1d(p_grid), lower_open=True)
    quantiles = [var(model, float(p)) for p in p_arr]
    shortfalls = [float(tail_mean(model, q)) for q in quantiles]
    return PlotSeries(
        x=quantiles,
        y=shortfalls,
        metadata={"x": "var", "y": "expected_shortfall", "p": p_arr.tolist()},
    )


# --- Incomplete beta cross-check ---


class TopShareCheck(BaseModel):
    p: float
    quadrature: float
    closed_form: float
    discrepancy: float


@requires_finite_mean
def top_share_closed_form(model: TailModel, p: float) -> float:
    """
    Top share of a ParetoI or Gpd model through the incomplete beta function.

    With w the top fraction, Q(1 - w) = u - sigma + sigma w^(-1/alpha), so
    the integral of Q over the top p-fraction is
    (u - sigma) p + sigma B(p; (alpha-1)/alpha, 1).
    """
    check_probability(p, lower_open=True, upper_open=False)
    if isinstance(model, ParetoI):
        model = model.as_gpd()
    if not isinstance(model, Gpd):
        raise InvalidInputError(f"No closed form for {type(model).__name__}")
    a = (model.alpha - 1.0) / model.alpha
    shift = model.u - model.sigma
    top = shift * p + model.sigma * incomplete_beta(p, a, 1.0)
    whole = shift + model.sigma * incomplete_beta(1.0, a, 1.0)
    return float(top / whole)


def top_share_check(model: TailModel, p: float) -> TopShareCheck:
    quad_value = top_share(model, p)
    closed = top_share_closed_form(model, p)
    discrepancy = abs(quad_value - closed)
    if discrepancy > 1e-6:
        logger.warning(
            "Top share quadrature %.10g and closed form %.10g disagree at p=%s",
            quad_value,
            closed,
            p,
        )
    return TopShareCheck(
        p=p, quadrature=quad_value, closed_form=closed, discrepancy=discrepancy
    )


# --- Composed measures ---


def var_composed(ct: ComposedTail, p: float) -> float:
    """
    Q_u(1 - p) of the composed law, for p up to q_u.

    Equals u at p = q_u. Smaller p map to the conditional tail level p / q_u.
    """
    check_probability(p, lower_open=True)
    if p > ct.q_u:
        raise ExtrapolationDomainError(ERROR_EXTRAPOLATION.format(p, ct.q_u))
    return float(inverse_survival(ct.model, min(p / ct.q_u, 1.0)))


@requires_finite_mean
def es_composed(ct: ComposedTail, p: float) -> float:
    return float(tail_mean(ct.model, var_composed(ct, p)))


def composed_mean(
    ct: ComposedTail, mean_estimator: MeanEstimator = MeanEstimator.HYBRID
) -> float:
    """
    Estimate of E[X] used in composed top shares.

    ``hybrid`` mixes the body mean with the parametric tail mean:
    (1 - q_u) body_mean + q_u E[X | X > u]. ``sample`` is the plain mean.
    """
    mean_estimator = MeanEstimator(mean_estimator)
    if mean_estimator is MeanEstimator.SAMPLE:
        if ct.sample_mean is None:
            raise InvalidInputError("The sample mean estimator needs sample_mean")
        return float(ct.sample_mean)
    return float(
        (1.0 - ct.q_u) * ct.body_mean + ct.q_u * tail_mean(ct.model, ct.fit.u)
    )


@requires_finite_mean
def top_share_composed(
    ct: ComposedTail,
    p: float,
    mean_estimator: MeanEstimator = MeanEstimator.HYBRID,
) -> float:
    """
    TS_u(p) = p ES_u(p) / E[X] for p up to q_u.

    Args:
        ct: Composed tail with alpha > 1
        p: Fraction in (0, q_u]
        mean_estimator: ``hybrid`` or ``sample`` estimate of E[X]

    Returns:
        Composed top share
    """
    return float(p * es_composed(ct, p) / composed_mean(ct, mean_estimator))


__all__ = [
    "ComposedTail",
    "TopShareCheck",
    "composed_mean",
    "empirical_top_share",
    "es_composed",
    "expected_shortfall",
    "lorenz",
    "max_sum_ratio",
    "risk_curve",
    "top_share",
    "top_share_check",
    "top_share_closed_form",
    "top_share_composed",
    "var",
    "var_composed",
]
