"""
Base estimator class for tail fits above a threshold.
"""

from abc import ABC, abstractmethod
from typing import ClassVar

import numpy as np

from ..core import FitMethod, OrderedSample, TailFit
from ..exceptions import InsufficientDataError
from ..utils.patterns import DEFAULT_LEVEL, ERROR_INSUFFICIENT_EXCEEDANCES


class TailEstimator(ABC):
    """
    Abstract base class for all tail estimators.

    Estimators take the observations strictly above a threshold u, together
    with the size of the sample they came from, and return a TailFit.
    """

    method: ClassVar[FitMethod]
    min_exceedances: ClassVar[int]

    @abstractmethod
    def fit_exceedances(
        self,
        exceedances: np.ndarray,
        n_total: int,
        u: float,
        level: float = DEFAULT_LEVEL,
        with_ci: bool = True,
    ) -> TailFit:
        """
        Fit the tail model to exceedances of u.

        Args:
            exceedances: Observations strictly above u
            n_total: Size of the sample the exceedances were drawn from
            u: Threshold
            level: Confidence level of the alpha interval
            with_ci: Whether to compute the alpha interval

        Returns:
            TailFit
        """
        pass

    def fit(
        self,
        sample: OrderedSample,
        u: float,
        level: float = DEFAULT_LEVEL,
        with_ci: bool = True,
    ) -> TailFit:
        return self.fit_exceedances(sample.exceedances(u), sample.n, u, level, with_ci)

    def check_exceedances(self, exceedances: np.ndarray, u: float) -> np.ndarray:
        exceedances = np.asarray(exceedances, dtype=float)
        if exceedances.size < self.min_exceedances:
            raise InsufficientDataError(
                ERROR_INSUFFICIENT_EXCEEDANCES.format(
                    self.method.value, self.min_exceedances, u, exceedances.size
                ),
                diagnostics={"n_exceed": int(exceedances.size), "u": u},
            )
        return exceedances
