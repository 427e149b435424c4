"""
Pareto-family tail models: strict Pareto (type I), generalized Pareto and
extended Pareto distributions.

Models are immutable parameter sets. Distribution functions dispatch on the
model type, accept scalars or arrays and return the same shape.
"""

import logging
from functools import singledispatch
from typing import Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from typing_extensions import Annotated

from .decorators import requires_finite_mean, validate_inputs
from .exceptions import ConvergenceError, InvalidInputError, InvalidParameterError
from .numerics import find_root, find_roots, integrate_finite
from .utils.patterns import (
    DEFAULT_ROOT_TOL,
    EPD_MONOTONE_GRID_DECADES,
    EPD_MONOTONE_GRID_POINTS,
    ERROR_BELOW_LOWER_BOUND,
    ERROR_EPD_DELTA,
    ERROR_EPD_NOT_MONOTONE,
    MAX_BRACKET_DOUBLINGS,
)
from .utils.utils import ArrayOrFloat, as_checked_array, check_probability, to_output

logger = logging.getLogger(__name__)


class _ModelParams(BaseModel):
    """Immutable parameter set; invalid values raise InvalidParameterError."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False, extra="forbid")

    def __init__(self, **data):
        try:
            super().__init__(**data)
        except ValidationError as exc:
            raise InvalidParameterError(
                f"Invalid {type(self).__name__} parameters: {exc}"
            ) from exc


class ParetoI(_ModelParams):
    """Strict Pareto distribution bounded below by u: S(x) = (x/u)^-alpha."""

    kind: Literal["pareto1"] = "pareto1"
    u: float = Field(gt=0.0)  # scale and lower bound
    alpha: float = Field(gt=0.0)  # tail index

    @property
    def xi(self) -> float:
        return 1.0 / self.alpha

    def as_gpd(self) -> "Gpd":
        """The same law written as Gpd(u, u, alpha)."""
        return Gpd(u=self.u, sigma=self.u, alpha=self.alpha)


class Gpd(_ModelParams):
    """
    Generalized Pareto distribution above u.

    S(x) = (1 + (x - u) / sigma)^-alpha for x >= u. The alternative scale
    lam = sigma - u gives S(x) = ((u + lam) / (x + lam))^alpha.
    """

    kind: Literal["gpd"] = "gpd"
    u: float = Field(ge=0.0)
    sigma: float = Field(gt=0.0)
    alpha: float = Field(gt=0.0)

    @property
    def lam(self) -> float:
        return self.sigma - self.u

    @property
    def xi(self) -> float:
        return 1.0 / self.alpha


class Epd(_ModelParams):
    """
    Extended Pareto distribution above u.

    S(x) = [z (1 + delta - delta z^tau)]^-alpha with z = x/u. delta = 0 gives
    the strict Pareto law and tau = -1 gives Gpd(u, u / (1 + delta), alpha).
    """

    kind: Literal["epd"] = "epd"
    u: float = Field(gt=0.0)
    delta: float
    tau: float = Field(le=0.0)
    alpha: float = Field(gt=0.0)

    @property
    def xi(self) -> float:
        return 1.0 / self.alpha

    @model_validator(mode="after")
    def _check_admissible(self) -> "Epd":
        bound = -1.0 if self.tau == 0.0 else max(-1.0, 1.0 / self.tau)
        if not self.delta > bound:
            raise ValueError(ERROR_EPD_DELTA.format(self.delta, bound, self.tau))
        grid = self.u * np.logspace(
            0.0, EPD_MONOTONE_GRID_DECADES, EPD_MONOTONE_GRID_POINTS
        )
        log_s = _log_survival(self, grid)
        if not (np.all(np.isfinite(log_s)) and np.all(np.diff(log_s) < 0.0)):
            raise ValueError(ERROR_EPD_NOT_MONOTONE.format(self))
        return self

    def as_gpd(self) -> Gpd:
        """The equivalent Gpd; only defined for tau = -1."""
        if self.tau != -1.0:
            raise InvalidParameterError(f"as_gpd requires tau=-1, got tau={self.tau}")
        return Gpd(u=self.u, sigma=self.u / (1.0 + self.delta), alpha=self.alpha)


TailModel = Annotated[Union[ParetoI, Gpd, Epd], Field(discriminator="kind")]


def _epd_terms(model: Epd, x: np.ndarray):
    """log z, z^tau and 1 + delta - delta z^tau, computed without cancellation."""
    log_z = np.log(x / model.u)
    w = np.exp(model.tau * log_z)
    d = 1.0 - model.delta * np.expm1(model.tau * log_z)
    return log_z, w, d


# --- Log survival ---


@singledispatch
def _log_survival(model, x: np.ndarray) -> np.ndarray:
    raise InvalidInputError(f"Unsupported tail model {type(model).__name__}")


@_log_survival.register
def _(model: ParetoI, x: np.ndarray) -> np.ndarray:
    return -model.alpha * np.log(x / model.u)


@_log_survival.register
def _(model: Gpd, x: np.ndarray) -> np.ndarray:
    return -model.alpha * np.log1p((x - model.u) / model.sigma)


@_log_survival.register
def _(model: Epd, x: np.ndarray) -> np.ndarray:
    log_z, _, d = _epd_terms(model, x)
    return -model.alpha * (log_z + np.log(d))


# --- Log density ---


@singledispatch
def _log_density(model, x: np.ndarray) -> np.ndarray:
    raise InvalidInputError(f"Unsupported tail model {type(model).__name__}")


@_log_density.register
def _(model: ParetoI, x: np.ndarray) -> np.ndarray:
    return (
        np.log(model.alpha)
        + model.alpha * np.log(model.u)
        - (model.alpha + 1.0) * np.log(x)
    )


@_log_density.register
def _(model: Gpd, x: np.ndarray) -> np.ndarray:
    return (
        np.log(model.alpha)
        - np.log(model.sigma)
        - (model.alpha + 1.0) * np.log1p((x - model.u) / model.sigma)
    )


@_log_density.register
def _(model: Epd, x: np.ndarray) -> np.ndarray:
    # f(x) = alpha S(x) / x * (D - delta tau z^tau) / D
    log_z, w, d = _epd_terms(model, x)
    log_s = -model.alpha * (log_z + np.log(d))
    return (
        np.log(model.alpha)
        - np.log(x)
        + log_s
        + np.log(d - model.delta * model.tau * w)
        - np.log(d)
    )


# --- Inverse survival ---


@singledispatch
def _inverse_log_survival(model, log_q: np.ndarray) -> np.ndarray:
    raise InvalidInputError(f"Unsupported tail model {type(model).__name__}")


@_inverse_log_survival.register
def _(model: ParetoI, log_q: np.ndarray) -> np.ndarray:
    return model.u * np.exp(-log_q / model.alpha)


@_inverse_log_survival.register
def _(model: Gpd, log_q: np.ndarray) -> np.ndarray:
    return model.u + model.sigma * np.expm1(-log_q / model.alpha)


@_inverse_log_survival.register
def _(model: Epd, log_q: np.ndarray) -> np.ndarray:
    result = np.full(log_q.shape, model.u, dtype=float)
    inner = log_q < 0.0
    if not np.any(inner):
        return result
    log_targets = log_q[inner]
    targets = np.exp(log_targets)

    # Start from the strict Pareto quantile and double until S(hi) <= q
    hi = model.u * np.exp(-log_targets / model.alpha)
    for _ in range(MAX_BRACKET_DOUBLINGS):
        short = _log_survival(model, hi) > log_targets
        if not np.any(short):
            break
        hi = np.where(short, 2.0 * hi, hi)
    else:
        raise ConvergenceError(f"Could not bracket the quantile of {model}")

    if targets.size == 1:
        target = float(targets[0])

        def gap(x: float) -> float:
            return float(np.exp(_log_survival(model, np.asarray(x)))) - target

        result[inner] = find_root(gap, model.u, float(hi[0]), tol=DEFAULT_ROOT_TOL)
        return result

    def gaps(x: np.ndarray) -> np.ndarray:
        return np.exp(_log_survival(model, x)) - targets

    lo = np.full(hi.shape, model.u)
    result[inner] = find_roots(gaps, lo, hi, tol=DEFAULT_ROOT_TOL)
    return result


# --- Conditional excess ---


@singledispatch
def _conditional_excess(model, u_prime: float):
    raise InvalidInputError(f"Unsupported tail model {type(model).__name__}")


@_conditional_excess.register
def _(model: ParetoI, u_prime: float) -> ParetoI:
    return ParetoI(u=u_prime, alpha=model.alpha)


@_conditional_excess.register
def _(model: Gpd, u_prime: float) -> Gpd:
    return Gpd(u=u_prime, sigma=model.sigma + u_prime - model.u, alpha=model.alpha)


@_conditional_excess.register
def _(model: Epd, u_prime: float) -> Epd:
    w = (u_prime / model.u) ** model.tau
    delta = model.delta * w / (1.0 + model.delta - model.delta * w)
    return Epd(u=u_prime, delta=delta, tau=model.tau, alpha=model.alpha)


# --- Tail mean ---


@singledispatch
def _tail_mean(model, u_prime: float) -> float:
    raise InvalidInputError(f"Unsupported tail model {type(model).__name__}")


@_tail_mean.register
def _(model: ParetoI, u_prime: float) -> float:
    return model.alpha * u_prime / (model.alpha - 1.0)


@_tail_mean.register
def _(model: Gpd, u_prime: float) -> float:
    return (model.sigma - model.u + model.alpha * u_prime) / (model.alpha - 1.0)


@_tail_mean.register
def _(model: Epd, u_prime: float) -> float:
    # E[X | X > u'] = u' + int_{u'}^inf S_{u'}(x) dx, with x = u'/t mapping the
    # tail onto (0, 1]
    excess_model = _conditional_excess(model, u_prime)

    def integrand(t: float) -> float:
        log_s = _log_survival(excess_model, np.asarray(u_prime / t))
        return float(np.exp(log_s - 2.0 * np.log(t)))

    result = integrate_finite(integrand, 0.0, 1.0)
    return u_prime + u_prime * result.value


# --- Public operations ---


def _check_at_or_above(model, value: float, name: str) -> float:
    arr, _ = as_checked_array(value)
    if arr.ndim != 0:
        raise InvalidInputError(f"{name} must be a scalar")
    if float(arr) < model.u:
        raise InvalidInputError(ERROR_BELOW_LOWER_BOUND.format(value, model.u))
    return float(arr)


def survival(model: TailModel, x: ArrayOrFloat) -> ArrayOrFloat:
    """P[X > x], computed directly so it stays accurate deep in the tail."""
    arr, scalar = as_checked_array(x)
    values = np.exp(_log_survival(model, np.maximum(arr, model.u)))
    return to_output(values, scalar)


def log_survival(model: TailModel, x: ArrayOrFloat) -> ArrayOrFloat:
    arr, scalar = as_checked_array(x)
    return to_output(_log_survival(model, np.maximum(arr, model.u)), scalar)


def cdf(model: TailModel, x: ArrayOrFloat) -> ArrayOrFloat:
    """P[X <= x]; zero at and below the lower bound."""
    arr, scalar = as_checked_array(x)
    values = -np.expm1(_log_survival(model, np.maximum(arr, model.u)))
    return to_output(values, scalar)


def density(model: TailModel, x: ArrayOrFloat) -> ArrayOrFloat:
    arr, scalar = as_checked_array(x)
    inside = arr >= model.u
    values = np.zeros(arr.shape, dtype=float)
    values[inside] = np.exp(_log_density(model, arr[inside]))
    return to_output(values, scalar)


def log_density(model: TailModel, x: ArrayOrFloat) -> ArrayOrFloat:
    arr, scalar = as_checked_array(x)
    inside = arr >= model.u
    values = np.full(arr.shape, -np.inf, dtype=float)
    values[inside] = _log_density(model, arr[inside])
    return to_output(values, scalar)


def quantile(model: TailModel, p: ArrayOrFloat) -> ArrayOrFloat:
    """
    Inverse of the cdf on [0, 1).

    Closed form for ParetoI and Gpd. Epd quantiles are found by bracketing
    root search on survival(x) - (1 - p).

    Args:
        model: Tail model
        p: Probability or array of probabilities in [0, 1)

    Returns:
        Quantile(s) of the same shape as p
    """
    arr, scalar = check_probability(p)
    values = _inverse_log_survival(model, np.log1p(-np.atleast_1d(arr)))
    return to_output(values.reshape(arr.shape), scalar)


def inverse_survival(model: TailModel, q: ArrayOrFloat) -> ArrayOrFloat:
    """
    The level exceeded with probability q, for q in (0, 1].

    Equals quantile(model, 1 - q) but keeps full precision for tiny q.
    """
    arr, scalar = check_probability(q, lower_open=True, upper_open=False)
    values = _inverse_log_survival(model, np.log(np.atleast_1d(arr)))
    return to_output(values.reshape(arr.shape), scalar)


@validate_inputs(
    lambda model, seed, n: int(n) == n and n >= 1, "requires a sample size n >= 1"
)
def sample(model: TailModel, seed: int, n: int) -> np.ndarray:
    """
    Draw n values by inverse transform from a generator seeded locally.

    Args:
        model: Tail model
        seed: Seed for numpy's default generator
        n: Number of draws

    Returns:
        Array of n draws
    """
    rng = np.random.default_rng(seed)
    return np.asarray(quantile(model, rng.random(int(n))), dtype=float)


@requires_finite_mean
def tail_mean(model: TailModel, u_prime: float) -> float:
    """
    E[X | X > u'] for u' at or above the lower bound.

    Args:
        model: Tail model with alpha > 1
        u_prime: Conditioning level

    Returns:
        The conditional mean
    """
    return float(_tail_mean(model, _check_at_or_above(model, u_prime, "u_prime")))


@requires_finite_mean
def mean(model: TailModel) -> float:
    return float(_tail_mean(model, model.u))


@requires_finite_mean
def mean_excess(model: TailModel, d: float) -> float:
    """e(d) = E[X - d | X > d]."""
    d = _check_at_or_above(model, d, "d")
    return float(_tail_mean(model, d) - d)


def conditional_excess(model: TailModel, u_prime: float) -> TailModel:
    """
    Law of X given X > u', which stays in the model's own family.

    Args:
        model: Tail model
        u_prime: New threshold, at or above the lower bound

    Returns:
        Tail model with lower bound u'
    """
    return _conditional_excess(model, _check_at_or_above(model, u_prime, "u_prime"))


def scollnik_cdf(model: Gpd, x: ArrayOrFloat) -> ArrayOrFloat:
    """Gpd cdf in the lam = sigma - u parameterization."""
    arr, scalar = as_checked_array(x)
    arr = np.maximum(arr, model.u)
    values = 1.0 - ((model.u + model.lam) / (arr + model.lam)) ** model.alpha
    return to_output(values, scalar)
