"""
Method dispatch for tail fits and tail-index stability across thresholds.
"""

import logging
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..core import FitMethod, OrderedSample, PlotSeries, TailFit
from ..decorators import record_failures
from ..utils.patterns import DEFAULT_LEVEL
from . import TailEstimator
from .hill import HillEstimator
from .likelihood import EpdEstimator, GpdEstimator

logger = logging.getLogger(__name__)

_ESTIMATORS: Dict[FitMethod, type] = {
    FitMethod.HILL: HillEstimator,
    FitMethod.MLE_GPD: GpdEstimator,
    FitMethod.MLE_EPD: EpdEstimator,
}


def estimator_for(method: FitMethod) -> TailEstimator:
    return _ESTIMATORS[FitMethod(method)]()


def fit_exceedances(
    exceedances: np.ndarray,
    n_total: int,
    u: float,
    method: FitMethod,
    level: float = DEFAULT_LEVEL,
    with_ci: bool = True,
) -> TailFit:
    """
    Fit a tail model to exceedances that do not come from an OrderedSample,
    such as standardized residuals above a positive threshold.
    """
    exceedances = np.sort(np.asarray(exceedances, dtype=float), kind="stable")
    estimator = estimator_for(method)
    return estimator.fit_exceedances(exceedances, n_total, u, level, with_ci)


def fit_tail(
    sample: OrderedSample,
    u: float,
    method: FitMethod,
    level: float = DEFAULT_LEVEL,
    with_ci: bool = True,
) -> TailFit:
    return estimator_for(method).fit(sample, u, level, with_ci)


def alpha_stability(
    sample: OrderedSample,
    thresholds: Sequence[float],
    method: FitMethod = FitMethod.HILL,
    level: float = DEFAULT_LEVEL,
    with_ci: bool = True,
) -> PlotSeries:
    """
    Tail-index estimates across a grid of thresholds.

    Thresholds whose fit fails are left out of the series and reported in
    ``metadata["failures"]``.

    Args:
        sample: Ordered sample
        thresholds: Candidate thresholds
        method: Estimation method
        level: Interval level for the lo/hi bands
        with_ci: Whether to compute the bands

    Returns:
        PlotSeries of alpha against threshold
    """
    method = FitMethod(method)
    fit_point = record_failures(method.value)(fit_tail)

    xs: List[float] = []
    ys: List[Optional[float]] = []
    lo: List[Optional[float]] = []
    hi: List[Optional[float]] = []
    n_exceed: List[int] = []
    failures: List[str] = []
    for u in thresholds:
        fit, notes = fit_point(sample, float(u), method, level, with_ci)
        if fit is None:
            failures.extend(f"u={u}: {note}" for note in notes)
            continue
        xs.append(float(u))
        ys.append(fit.alpha)
        lo.append(fit.alpha_ci.lo if fit.alpha_ci else None)
        hi.append(fit.alpha_ci.hi if fit.alpha_ci else None)
        n_exceed.append(fit.n_exceed)
    if failures:
        logger.warning("alpha_stability skipped %d thresholds", len(failures))
    return PlotSeries(
        x=xs,
        y=ys,
        lo=lo if with_ci else None,
        hi=hi if with_ci else None,
        metadata={
            "x": "threshold",
            "y": "alpha_hat",
            "method": method.value,
            "level": level,
            "n_exceed": n_exceed,
            "failures": failures,
        },
    )
