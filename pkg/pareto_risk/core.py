"""
Core types shared across pareto-risk modules.
"""

from enum import Enum
from typing import Any, Dict, Iterable, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .distributions import TailModel
from .exceptions import InvalidInputError
from .utils.patterns import NOTE_SMALL_TAIL, SMALL_TAIL_EXCEEDANCES


class FitMethod(str, Enum):
    """
    Estimation methods for the tail index above a threshold.
    """

    HILL = "hill"  # Strict Pareto maximum likelihood
    MLE_GPD = "mle_gpd"  # Generalized Pareto maximum likelihood
    MLE_EPD = "mle_epd"  # Extended Pareto maximum likelihood


class ModelKind(str, Enum):
    """Tail model families selectable by name."""

    PARETO = "pareto"
    GPD = "gpd"
    EPD = "epd"

    @property
    def fit_method(self) -> FitMethod:
        return {
            ModelKind.PARETO: FitMethod.HILL,
            ModelKind.GPD: FitMethod.MLE_GPD,
            ModelKind.EPD: FitMethod.MLE_EPD,
        }[self]


class FilterKind(str, Enum):
    """Volatility filters for dynamic risk."""

    EWMA = "ewma"
    GARCH = "garch"


class MeanEstimator(str, Enum):
    """Estimators of E[X] used in composed top shares."""

    HYBRID = "hybrid"  # Empirical body mean plus parametric tail mean
    SAMPLE = "sample"  # Plain sample mean


class PriceMode(str, Enum):
    """How a loaded value column is interpreted."""

    PRICE = "price"
    RETURN = "return"


class Interval(BaseModel):
    """
    Closed interval with an optional confidence level.

    ``open_lo``/``open_hi`` flag endpoints that were not located inside the
    searched range; the stored value is then the edge of that range.
    """

    lo: float
    hi: float
    level: Optional[float] = None
    open_lo: bool = False
    open_hi: bool = False

    @model_validator(mode="after")
    def _ordered(self) -> "Interval":
        if self.lo > self.hi:
            raise ValueError(
                f"Interval lower end {self.lo} exceeds upper end {self.hi}"
            )
        return self

    def contains(self, value: float) -> bool:
        return self.lo <= value <= self.hi

    @property
    def width(self) -> float:
        return self.hi - self.lo


class PlotSeries(BaseModel):
    """
    Data behind one diagnostic plot.

    Gaps are stored as None. ``metadata`` holds free-form notes and must stay
    JSON serializable.
    """

    x: List[float]
    y: List[Optional[float]]
    lo: Optional[List[Optional[float]]] = None
    hi: Optional[List[Optional[float]]] = None
    metadata: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _aligned(self) -> "PlotSeries":
        n = len(self.x)
        for name in ("y", "lo", "hi"):
            values = getattr(self, name)
            if values is not None and len(values) != n:
                raise ValueError(f"{name} has length {len(values)}, expected {n}")
        return self

    def __len__(self) -> int:
        return len(self.x)


class OrderedSample(BaseModel):
    """
    Ascending positive observations x_{1:n} <= ... <= x_{n:n}.

    Sorting is stable, so ties keep their input order.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray

    @field_validator("values", mode="before")
    @classmethod
    def _sorted_positive(cls, value: Any) -> np.ndarray:
        arr = np.asarray(value, dtype=float).ravel()
        if arr.size < 1:
            raise ValueError("OrderedSample needs at least one observation")
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
            raise ValueError("OrderedSample values must be finite and positive")
        arr = np.sort(arr, kind="stable")
        arr.setflags(write=False)
        return arr

    @classmethod
    def from_values(cls, values: Iterable[float]) -> "OrderedSample":
        return cls(values=np.fromiter(values, dtype=float))

    @property
    def n(self) -> int:
        return int(self.values.size)

    def order_statistic(self, i: int) -> float:
        """The i-th smallest observation, 1-based."""
        if not 1 <= i <= self.n:
            raise InvalidInputError(f"Order statistic index {i} outside [1, {self.n}]")
        return float(self.values[i - 1])

    def exceedances(self, u: float) -> np.ndarray:
        """Observations strictly above u, ascending."""
        return self.values[np.searchsorted(self.values, u, side="right") :]

    def at_or_below(self, u: float) -> np.ndarray:
        return self.values[: np.searchsorted(self.values, u, side="right")]

    def quantile(self, level: float) -> float:
        """Empirical quantile as an order statistic (lower interpolation)."""
        return float(np.quantile(self.values, level, method="lower"))

    def mean(self) -> float:
        return float(np.mean(self.values))


class TailFit(BaseModel):
    """
    A tail model fitted above threshold u.

    ``q_u`` is the fraction of the source sample above u and ``loglik`` the
    log-likelihood of the exceedances under ``model``.
    """

    model: TailModel
    u: float
    n_exceed: int = Field(ge=1)
    n_total: int = Field(ge=1)
    q_u: float = Field(gt=0.0, le=1.0)
    loglik: float
    alpha_ci: Optional[Interval] = None
    method: FitMethod
    notes: List[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def _consistent(self) -> "TailFit":
        if self.n_exceed > self.n_total:
            raise ValueError(
                f"n_exceed={self.n_exceed} exceeds n_total={self.n_total}"
            )
        if abs(self.q_u - self.n_exceed / self.n_total) > 1e-12:
            raise ValueError(f"q_u={self.q_u} differs from n_exceed/n_total")
        if self.model.u != self.u:
            raise ValueError(
                f"Model lower bound {self.model.u} differs from u={self.u}"
            )
        if self.alpha_ci is not None and not self.alpha_ci.contains(self.model.alpha):
            raise ValueError(
                f"alpha_ci {self.alpha_ci} excludes alpha={self.model.alpha}"
            )
        return self

    def model_post_init(self, __context):
        """
        Flag fits resting on few exceedances.
        """
        note = NOTE_SMALL_TAIL.format(self.n_exceed)
        if self.n_exceed < SMALL_TAIL_EXCEEDANCES and note not in self.notes:
            self.notes.append(note)

    @property
    def alpha(self) -> float:
        return self.model.alpha
