"""
Maximum likelihood for generalized and extended Pareto tails, with
profile-likelihood intervals for the tail index.

For both families the likelihood is maximized through a profile: the GPD
scale solves a one-dimensional score equation for fixed alpha, and the EPD
tail index has a closed form for fixed (delta, tau).
"""

import logging
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..core import FitMethod, Interval, ModelKind, OrderedSample, PlotSeries, TailFit
from ..distributions import Epd, Gpd
from ..exceptions import (
    DegenerateDataError,
    FitError,
    InvalidInputError,
    InvalidParameterError,
    NumericalError,
)
from ..numerics import find_root, minimize, minimize_scalar
from ..utils.patterns import (
    ALPHA_BOUNDARY_FRACTION,
    ALPHA_MAX,
    ALPHA_MIN,
    ALPHA_SCAN_POINTS,
    DEFAULT_LEVEL,
    EPD_DELTA_MARGIN,
    EPD_DELTA_MAX,
    EPD_DELTA_SCAN_POINTS,
    EPD_TAU_GRID,
    EPD_TAU_MIN,
    ERROR_ALL_STARTS_FAILED,
    ERROR_DEGENERATE_EXCEEDANCES,
    MIN_EPD_EXCEEDANCES,
    MIN_GPD_EXCEEDANCES,
    NOTE_OPEN_INTERVAL,
    PROFILE_GRID_POINTS,
    PROFILE_SPAN,
)
from ..utils.utils import chi2_drop
from . import TailEstimator

logger = logging.getLogger(__name__)

ProfileFunction = Callable[[float], float]


# --- Profile intervals ---


def _profile_interval(
    profile: ProfileFunction,
    alpha_hat: float,
    loglik_max: float,
    level: float,
    span: float = PROFILE_SPAN,
) -> Interval:
    """
    {alpha : profile(alpha) >= loglik_max - chi2_1(level) / 2}, by root finding
    on each side of alpha_hat inside [alpha_hat / span, alpha_hat * span].
    """
    cutoff = loglik_max - chi2_drop(level)

    def above_cutoff(alpha: float) -> float:
        value = profile(alpha)
        return value - cutoff if np.isfinite(value) else -1e6

    lo_edge = max(alpha_hat / span, ALPHA_MIN)
    hi_edge = min(alpha_hat * span, ALPHA_MAX)
    open_lo = open_hi = False
    if lo_edge >= alpha_hat or above_cutoff(lo_edge) > 0.0:
        lo, open_lo = min(lo_edge, alpha_hat), True
    else:
        lo = find_root(above_cutoff, lo_edge, alpha_hat, tol=1e-10)
    if hi_edge <= alpha_hat or above_cutoff(hi_edge) > 0.0:
        hi, open_hi = max(hi_edge, alpha_hat), True
    else:
        hi = find_root(above_cutoff, alpha_hat, hi_edge, tol=1e-10)
    if open_lo or open_hi:
        logger.warning(NOTE_OPEN_INTERVAL)
    return Interval(lo=lo, hi=hi, level=level, open_lo=open_lo, open_hi=open_hi)


def _profile_curve(
    profile: ProfileFunction,
    alpha_hat: float,
    ci: Interval,
    loglik_max: float,
    level: float,
    grid_size: int,
    kind: ModelKind,
) -> PlotSeries:
    pad = 0.5 * max(ci.width, 1e-3 * alpha_hat)
    grid = np.linspace(max(ci.lo - pad, ALPHA_MIN), ci.hi + pad, grid_size)
    values = [profile(a) for a in grid]
    return PlotSeries(
        x=grid.tolist(),
        y=[float(v) if np.isfinite(v) else None for v in values],
        metadata={
            "model_kind": kind.value,
            "alpha_hat": alpha_hat,
            "loglik_max": loglik_max,
            "cutoff": loglik_max - chi2_drop(level),
            "level": level,
            "ci": [ci.lo, ci.hi],
        },
    )


def _interval_notes(ci: Optional[Interval]) -> List[str]:
    if ci is not None and (ci.open_lo or ci.open_hi):
        return [NOTE_OPEN_INTERVAL]
    return []


# --- Generalized Pareto ---


class _GpdLikelihood:
    """Log-likelihood of excesses y = x - u under Gpd(u, sigma, alpha)."""

    def __init__(self, excesses: np.ndarray, u: float):
        self.y = excesses
        self.u = u
        self.n = excesses.size

    def loglik(self, sigma: float, alpha: float) -> float:
        if sigma <= 0.0 or alpha <= 0.0:
            return -np.inf
        return float(
            self.n * (np.log(alpha) - np.log(sigma))
            - (alpha + 1.0) * np.log1p(self.y / sigma).sum()
        )

    def sigma_given_alpha(self, alpha: float) -> float:
        # Score equation in sigma: mean(y / (sigma + y)) = 1 / (alpha + 1); the
        # left side decreases from 1 to 0, so the root is unique
        target = 1.0 / (alpha + 1.0)

        def score(sigma: float) -> float:
            return float(np.mean(self.y / (sigma + self.y))) - target

        lo = float(self.y.min()) * 1e-12
        hi = 2.0 * (alpha + 1.0) * float(self.y.mean())
        return find_root(score, lo, hi)

    def profile(self, alpha: float) -> float:
        if alpha <= 0.0:
            return -np.inf
        return self.loglik(self.sigma_given_alpha(alpha), alpha)

    def maximize(self) -> Tuple[float, float, float]:
        """Return (sigma_hat, alpha_hat, loglik)."""
        res = minimize_scalar(
            lambda log_a: -self.profile(float(np.exp(log_a))),
            np.log(ALPHA_MIN),
            np.log(ALPHA_MAX),
            scan_points=ALPHA_SCAN_POINTS,
        )
        alpha = float(np.exp(res.argmin[0]))
        if alpha >= ALPHA_BOUNDARY_FRACTION * ALPHA_MAX:
            raise DegenerateDataError(
                ERROR_DEGENERATE_EXCEEDANCES.format(
                    self.u, "likelihood increases toward the exponential limit"
                ),
                diagnostics={"alpha": alpha, "n_exceed": self.n},
            )
        sigma = self.sigma_given_alpha(alpha)
        return sigma, alpha, self.loglik(sigma, alpha)


def gpd_fisher_information(model: Gpd) -> np.ndarray:
    """
    Expected Fisher information of one excess for (sigma, alpha).

    Returns:
        2x2 matrix ordered (sigma, alpha)
    """
    s, a = model.sigma, model.alpha
    return np.array(
        [
            [a / (s**2 * (a + 2.0)), -1.0 / (s * (a + 1.0))],
            [-1.0 / (s * (a + 1.0)), 1.0 / a**2],
        ]
    )


class GpdEstimator(TailEstimator):
    """
    Generalized Pareto maximum likelihood on the excesses over u.
    """

    method = FitMethod.MLE_GPD
    min_exceedances = MIN_GPD_EXCEEDANCES

    def likelihood(self, exceedances: np.ndarray, u: float) -> _GpdLikelihood:
        if not u >= 0.0:
            raise InvalidInputError(f"GPD fits need u >= 0, got {u}")
        x = self.check_exceedances(exceedances, u)
        y = x - u
        if np.ptp(y) <= 1e-12 * float(y.max()):
            raise DegenerateDataError(
                ERROR_DEGENERATE_EXCEEDANCES.format(u, "all excesses are equal"),
                diagnostics={"n_exceed": int(y.size), "excess": float(y[0])},
            )
        return _GpdLikelihood(y, u)

    def fit_exceedances(
        self,
        exceedances: np.ndarray,
        n_total: int,
        u: float,
        level: float = DEFAULT_LEVEL,
        with_ci: bool = True,
    ) -> TailFit:
        lik = self.likelihood(exceedances, u)
        try:
            sigma, alpha, loglik = lik.maximize()
            ci = (
                _profile_interval(lik.profile, alpha, loglik, level)
                if with_ci
                else None
            )
        except NumericalError as exc:
            raise FitError(f"GPD fit above u={u} failed: {exc}", {"u": u}) from exc
        logger.debug("GPD fit u=%s sigma=%.6g alpha=%.6g", u, sigma, alpha)
        notes = _interval_notes(ci)
        return TailFit(
            model=Gpd(u=u, sigma=sigma, alpha=alpha),
            u=u,
            n_exceed=lik.n,
            n_total=n_total,
            q_u=lik.n / n_total,
            loglik=loglik,
            alpha_ci=ci,
            method=self.method,
            notes=notes,
        )


def fit_gpd(sample: OrderedSample, u: float, level: float = DEFAULT_LEVEL) -> TailFit:
    """
    Fit Gpd(u, sigma, alpha) to the observations above u.

    Args:
        sample: Ordered sample
        u: Threshold
        level: Level of the profile-likelihood interval for alpha

    Returns:
        TailFit with method mle_gpd
    """
    return GpdEstimator().fit(sample, u, level)


# --- Extended Pareto ---


class _EpdLikelihood:
    """
    Log-likelihood of exceedances under Epd(u, delta, tau, alpha).

    Free parameters are (delta, tau) unless frozen; alpha is either given or
    replaced by its closed-form maximizer n / sum(log(z D)).
    """

    def __init__(
        self,
        exceedances: np.ndarray,
        u: float,
        fixed_delta: Optional[float] = None,
        fixed_tau: Optional[float] = None,
    ):
        self.u = u
        self.log_z = np.log(exceedances / u)
        self.sum_log_x = float(np.log(exceedances).sum())
        self.n = exceedances.size
        self.fixed_delta = fixed_delta
        self.fixed_tau = fixed_tau

    @staticmethod
    def admissible(delta: float, tau: float) -> bool:
        return tau <= 0.0 and delta > -1.0 and delta * tau < 1.0

    def _terms(self, delta: float, tau: float) -> Tuple[np.ndarray, np.ndarray]:
        tl = tau * self.log_z
        d = 1.0 - delta * np.expm1(tl)
        g = d - delta * tau * np.exp(tl)
        return d, g

    def alpha_given(self, delta: float, tau: float) -> float:
        d, _ = self._terms(delta, tau)
        return self.n / float((self.log_z + np.log(d)).sum())

    def loglik(self, delta: float, tau: float, alpha: Optional[float] = None) -> float:
        if not self.admissible(delta, tau):
            return -np.inf
        d, g = self._terms(delta, tau)
        if np.any(d <= 0.0) or np.any(g <= 0.0):
            return -np.inf
        log_d = np.log(d)
        if alpha is None:
            alpha = self.n / float((self.log_z + log_d).sum())
        if not alpha > 0.0:
            return -np.inf
        return float(
            self.n * np.log(alpha)
            - self.sum_log_x
            - alpha * (self.log_z.sum() + log_d.sum())
            + np.log(g).sum()
            - log_d.sum()
        )

    def _delta_floor(self, tau: float) -> float:
        return -1.0 if tau == 0.0 else max(-1.0, 1.0 / tau)

    def maximize(
        self,
        alpha: Optional[float] = None,
        starts: Sequence[Tuple[float, float]] = (),
    ) -> Tuple[float, float, float]:
        """
        Maximize over the free shape parameters at fixed (or profiled) alpha.

        Returns:
            (delta, tau, loglik)
        """
        fd, ft = self.fixed_delta, self.fixed_tau
        if fd is not None and ft is not None:
            return fd, ft, self.loglik(fd, ft, alpha)
        if fd == 0.0 or ft == 0.0:
            # The law is strict Pareto whatever the other shape parameter
            delta = 0.0 if fd is None else fd
            tau = -1.0 if ft is None else ft
            return delta, tau, self.loglik(delta, tau, alpha)
        if ft is not None:
            floor = self._delta_floor(ft)
            res = minimize_scalar(
                lambda s: -self.loglik(floor + np.exp(s), ft, alpha),
                np.log(EPD_DELTA_MARGIN),
                np.log(EPD_DELTA_MAX + 1.0),
                scan_points=EPD_DELTA_SCAN_POINTS,
            )
            return floor + float(np.exp(res.argmin[0])), ft, -res.objective
        if fd is not None:
            tau_lo = EPD_TAU_MIN if fd >= 0.0 else max(EPD_TAU_MIN, 1.0 / fd)
            res = minimize_scalar(
                lambda t: -self.loglik(fd, t, alpha),
                tau_lo + EPD_DELTA_MARGIN,
                0.0,
                scan_points=EPD_DELTA_SCAN_POINTS,
            )
            return fd, res.argmin[0], -res.objective

        best: Optional[Tuple[float, float, float]] = None
        failures: List[str] = []
        bounds = [(-1.0 + EPD_DELTA_MARGIN, EPD_DELTA_MAX), (EPD_TAU_MIN, 0.0)]
        for delta0, tau0 in starts:
            try:
                res = minimize(
                    lambda th: -self.loglik(th[0], th[1], alpha),
                    [delta0, tau0],
                    bounds=bounds,
                    step=[0.5, 0.25 * max(abs(tau0), 1.0)],
                )
            except NumericalError as exc:
                failures.append(f"start ({delta0}, {tau0}): {exc}")
                continue
            logger.debug(
                "EPD start (%s, %s) -> %s loglik=%.10g",
                delta0,
                tau0,
                res.argmin,
                -res.objective,
            )
            if best is None or -res.objective > best[2]:
                best = (res.argmin[0], res.argmin[1], -res.objective)
        if best is None:
            raise FitError(
                ERROR_ALL_STARTS_FAILED.format(len(starts)), {"failures": failures}
            )
        return best

    def profile_starts(
        self, delta_hat: float, tau_hat: float
    ) -> List[Tuple[float, float]]:
        return [(delta_hat, tau_hat)]


class EpdEstimator(TailEstimator):
    """
    Extended Pareto maximum likelihood on relative excesses x / u.

    The shape parameters are searched from a fixed grid of tau starts with
    delta = 0 (the strict Pareto fit), so the result is deterministic and
    never worse than the Hill fit.
    """

    method = FitMethod.MLE_EPD
    min_exceedances = MIN_EPD_EXCEEDANCES

    def __init__(
        self,
        fixed_delta: Optional[float] = None,
        fixed_tau: Optional[float] = None,
        tau_grid: Sequence[float] = EPD_TAU_GRID,
    ):
        self.fixed_delta = fixed_delta
        self.fixed_tau = fixed_tau
        self.tau_grid = tuple(tau_grid)

    def likelihood(self, exceedances: np.ndarray, u: float) -> _EpdLikelihood:
        if not u > 0.0:
            raise InvalidInputError(f"EPD fits need u > 0, got {u}")
        x = self.check_exceedances(exceedances, u)
        return _EpdLikelihood(x, u, self.fixed_delta, self.fixed_tau)

    def fit_exceedances(
        self,
        exceedances: np.ndarray,
        n_total: int,
        u: float,
        level: float = DEFAULT_LEVEL,
        with_ci: bool = True,
    ) -> TailFit:
        lik = self.likelihood(exceedances, u)
        delta, tau, loglik = lik.maximize(starts=[(0.0, t) for t in self.tau_grid])
        alpha = lik.alpha_given(delta, tau)
        try:
            model = Epd(u=u, delta=delta, tau=tau, alpha=alpha)
        except InvalidParameterError as exc:
            raise FitError(
                f"EPD optimum is not an admissible model: {exc}",
                {"delta": delta, "tau": tau, "alpha": alpha},
            ) from exc

        ci = None
        if with_ci:

            def profile(a: float) -> float:
                return lik.maximize(alpha=a, starts=lik.profile_starts(delta, tau))[2]

            try:
                ci = _profile_interval(profile, alpha, loglik, level)
            except NumericalError as exc:
                raise FitError(f"EPD profile interval failed: {exc}", {"u": u}) from exc
        logger.debug(
            "EPD fit u=%s delta=%.6g tau=%.6g alpha=%.6g", u, delta, tau, alpha
        )
        notes = _interval_notes(ci)
        return TailFit(
            model=model,
            u=u,
            n_exceed=lik.n,
            n_total=n_total,
            q_u=lik.n / n_total,
            loglik=loglik,
            alpha_ci=ci,
            method=self.method,
            notes=notes,
        )


def fit_epd(
    sample: OrderedSample,
    u: float,
    level: float = DEFAULT_LEVEL,
    fixed_delta: Optional[float] = None,
    fixed_tau: Optional[float] = None,
    with_ci: bool = True,
) -> TailFit:
    """
    Fit Epd(u, delta, tau, alpha) to the observations above u.

    Args:
        sample: Ordered sample
        u: Positive threshold
        level: Level of the profile-likelihood interval for alpha
        fixed_delta: Freeze delta at this value (0 reproduces the Hill fit)
        fixed_tau: Freeze tau at this value (-1 reproduces the GPD fit)
        with_ci: Whether to compute the profile interval

    Returns:
        TailFit with method mle_epd
    """
    estimator = EpdEstimator(fixed_delta=fixed_delta, fixed_tau=fixed_tau)
    return estimator.fit(sample, u, level, with_ci)


# --- Profile likelihood ---


def profile_alpha(
    sample: OrderedSample,
    u: float,
    model_kind: ModelKind = ModelKind.GPD,
    level: float = DEFAULT_LEVEL,
    grid_size: int = PROFILE_GRID_POINTS,
    span: float = PROFILE_SPAN,
) -> Tuple[float, Interval, PlotSeries]:
    """
    Profile log-likelihood of alpha with its likelihood-ratio interval.

    Args:
        sample: Ordered sample
        u: Threshold
        model_kind: gpd or epd
        level: Interval level, calibrated by chi-square(1)
        grid_size: Number of alpha values on the returned curve
        span: The interval search covers [alpha_hat / span, alpha_hat * span]

    Returns:
        (alpha_hat, interval, curve)
    """
    model_kind = ModelKind(model_kind)
    exceedances = sample.exceedances(u)
    if model_kind is ModelKind.GPD:
        lik = GpdEstimator().likelihood(exceedances, u)
        _, alpha_hat, loglik_max = lik.maximize()
        profile = lik.profile
    elif model_kind is ModelKind.EPD:
        estimator = EpdEstimator()
        epd_lik = estimator.likelihood(exceedances, u)
        delta, tau, loglik_max = epd_lik.maximize(
            starts=[(0.0, t) for t in estimator.tau_grid]
        )
        alpha_hat = epd_lik.alpha_given(delta, tau)

        def profile(a: float) -> float:
            starts = epd_lik.profile_starts(delta, tau)
            return epd_lik.maximize(alpha=a, starts=starts)[2]

    else:
        raise InvalidInputError(f"profile_alpha supports gpd and epd, got {model_kind}")

    ci = _profile_interval(profile, alpha_hat, loglik_max, level, span)
    curve = _profile_curve(
        profile, alpha_hat, ci, loglik_max, level, grid_size, model_kind
    )
    return alpha_hat, ci, curve
