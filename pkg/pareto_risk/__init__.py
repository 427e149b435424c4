"""
pareto-risk: Heavy-tail risk analytics for losses and returns

This package fits Pareto-family tail models above a threshold and derives
risk measures, reinsurance premiums, return levels and GARCH-filtered
dynamic VaR/ES from them.
"""

from .core import (
    FilterKind,
    FitMethod,
    Interval,
    MeanEstimator,
    ModelKind,
    OrderedSample,
    PlotSeries,
    PriceMode,
    TailFit,
)
from .distributions import Epd, Gpd, ParetoI, TailModel
from .exceptions import ParetoRiskError
from .tail_estimation.fitting import alpha_stability, fit_tail

__all__ = [
    "Epd",
    "FilterKind",
    "FitMethod",
    "Gpd",
    "Interval",
    "MeanEstimator",
    "ModelKind",
    "OrderedSample",
    "ParetoI",
    "ParetoRiskError",
    "PlotSeries",
    "PriceMode",
    "TailFit",
    "TailModel",
    "alpha_stability",
    "fit_tail",
]

__version__ = "0.1.0"
