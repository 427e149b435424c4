from typing import Any, Optional, Tuple, Union

import numpy as np
from scipy import stats

from ..exceptions import InvalidInputError
from .patterns import (
    ERROR_NON_FINITE_INPUT,
    ERROR_PROBABILITY_RANGE,
    ERROR_THRESHOLD_SPEC,
)

ArrayOrFloat = Union[float, np.ndarray]


def as_checked_array(x: Any) -> Tuple[np.ndarray, bool]:
    """
    Coerce a scalar or array-like argument into a finite float array.

    Args:
        x: Scalar or array-like argument

    Returns:
        Tuple of (float array, whether the input was a scalar)
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(ERROR_NON_FINITE_INPUT.format(x))
    return arr, arr.ndim == 0


def to_output(values: np.ndarray, scalar: bool) -> ArrayOrFloat:
    """Return a Python float for scalar calls and an array otherwise."""
    if scalar:
        return float(values)
    return values


def check_probability(
    p: Any, lower_open: bool = False, upper_open: bool = True
) -> Tuple[np.ndarray, bool]:
    """
    Validate a probability argument against [0, 1) or one of its variants.

    Args:
        p: Scalar or array of probabilities
        lower_open: Exclude 0 from the admissible range
        upper_open: Exclude 1 from the admissible range

    Returns:
        Tuple of (float array, whether the input was a scalar)
    """
    arr, scalar = as_checked_array(p)
    low_ok = arr > 0 if lower_open else arr >= 0
    high_ok = arr < 1 if upper_open else arr <= 1
    if not np.all(low_ok & high_ok):
        interval = f"{'(' if lower_open else '['}0, 1{')' if upper_open else ']'}"
        raise InvalidInputError(ERROR_PROBABILITY_RANGE.format(interval, p))
    return arr, scalar


def z_value(level: float) -> float:
    """Two-sided standard normal critical value for a confidence level."""
    check_probability(level, lower_open=True)
    return float(stats.norm.ppf(0.5 + level / 2.0))


def chi2_drop(level: float) -> float:
    """Half the chi-square(1) quantile: the log-likelihood drop of a profile CI."""
    check_probability(level, lower_open=True)
    return 0.5 * float(stats.chi2.ppf(level, 1))


def tail_index_of(obj: Any) -> float:
    """
    Find the tail index of a model, a fit, or a composed tail.

    Args:
        obj: Anything exposing ``alpha`` directly, via ``model`` or via ``fit``

    Returns:
        The tail index alpha
    """
    for path in (("alpha",), ("model", "alpha"), ("fit", "model", "alpha")):
        target = obj
        for attr in path:
            target = getattr(target, attr, None)
            if target is None:
                break
        if target is not None:
            return float(target)
    raise InvalidInputError(f"Object of type {type(obj).__name__} has no tail index")


def resolve_threshold(
    values: np.ndarray, threshold: Optional[float] = None, level: Optional[float] = None
) -> float:
    """
    Turn an absolute threshold or a quantile level into a threshold value.

    Quantile levels resolve to an order statistic of ``values``.

    Args:
        values: Observations the level refers to
        threshold: Absolute threshold
        level: Quantile level in [0, 1)

    Returns:
        The threshold
    """
    if (threshold is None) == (level is None):
        raise InvalidInputError(ERROR_THRESHOLD_SPEC)
    if threshold is not None:
        return float(threshold)
    check_probability(level)
    return float(np.quantile(np.asarray(values, dtype=float), level, method="lower"))
