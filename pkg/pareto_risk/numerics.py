"""
Numerical kernels: quadrature, root finding, derivative-free minimization and
the incomplete beta function, each with explicit tolerances.
"""

import logging
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field
from scipy import integrate, optimize, special

from .decorators import validate_inputs
from .exceptions import (
    BracketError,
    ConvergenceError,
    InvalidInputError,
    OptimizationError,
)
from .utils.patterns import (
    DEFAULT_BISECTION_MAX_ITER,
    DEFAULT_OPTIM_MAX_ITER,
    DEFAULT_OPTIM_TOL,
    DEFAULT_QUAD_LIMIT,
    DEFAULT_QUAD_TOL,
    DEFAULT_ROOT_TOL,
    ERROR_NO_SIGN_CHANGE,
    ERROR_NOT_CONVERGED,
    ERROR_OBJECTIVE_NON_FINITE,
)

logger = logging.getLogger(__name__)

Bounds = Sequence[Tuple[Optional[float], Optional[float]]]


class QuadratureResult(BaseModel):
    """Value of a definite integral with its error estimate."""

    value: float
    abs_error_estimate: float = Field(ge=0.0)
    evaluations: int = Field(ge=0)


class OptimResult(BaseModel):
    """
    Outcome of a minimization.

    ``converged`` is True only when the simplex (or bracket) shrank below the
    requested tolerance.
    """

    argmin: Tuple[float, ...]
    objective: float
    converged: bool
    iterations: int = Field(ge=0)


@validate_inputs(lambda f, a, b, *args, **kwargs: a < b, "requires a < b")
def integrate_finite(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = DEFAULT_QUAD_TOL,
    limit: int = DEFAULT_QUAD_LIMIT,
) -> QuadratureResult:
    """
    Integrate f over [a, b] by adaptive Gauss-Kronrod subdivision.

    The rule never evaluates f at the endpoints, so integrable endpoint
    singularities are admissible.

    Args:
        f: Integrand, finite on the open interval
        a: Lower limit
        b: Upper limit
        tol: Absolute (and relative) tolerance
        limit: Maximum number of subintervals

    Returns:
        QuadratureResult
    """
    out = integrate.quad(f, a, b, epsabs=tol, epsrel=tol, limit=limit, full_output=1)
    value, abserr, info = out[0], out[1], out[2]
    if len(out) > 3:
        # quad appends a diagnostic message whenever ier > 0
        raise ConvergenceError(
            ERROR_NOT_CONVERGED.format(tol, a, b, out[3]), best_estimate=float(value)
        )
    return QuadratureResult(
        value=float(value),
        abs_error_estimate=abs(float(abserr)),
        evaluations=int(info["neval"]),
    )


def find_root(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = DEFAULT_ROOT_TOL,
) -> float:
    """
    Locate a root of f inside a sign-changing bracket.

    Uses Brent's method, which falls back to bisection steps and therefore
    always converges on a valid bracket.

    Args:
        f: Continuous function
        lo: Left end of the bracket
        hi: Right end of the bracket
        tol: Bracket width tolerance, relative to max(1, |x|)

    Returns:
        The root
    """
    if not lo < hi:
        raise InvalidInputError(f"find_root requires lo < hi, got [{lo}, {hi}]")
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0.0:
        return float(lo)
    if f_hi == 0.0:
        return float(hi)
    if not (np.isfinite(f_lo) and np.isfinite(f_hi)) or np.sign(f_lo) == np.sign(f_hi):
        raise BracketError(ERROR_NO_SIGN_CHANGE.format(lo, hi, f_lo, f_hi))
    # brentq stops at |dx| <= xtol + rtol*|x|, which is within tol * max(1, |x|)
    rtol = max(tol / 2.0, 4.0 * np.finfo(float).eps)
    return float(optimize.brentq(f, lo, hi, xtol=tol / 2.0, rtol=rtol, maxiter=500))


def find_roots(
    f: Callable[[np.ndarray], np.ndarray],
    lo: np.ndarray,
    hi: np.ndarray,
    tol: float = DEFAULT_ROOT_TOL,
    max_iter: int = DEFAULT_BISECTION_MAX_ITER,
) -> np.ndarray:
    """
    Solve many independent bracketed root problems at once by bisection.

    Args:
        f: Vectorized function; element i of f(x) depends only on x[i]
        lo: Left bracket ends
        hi: Right bracket ends
        tol: Bracket width tolerance, relative to max(1, |x|)
        max_iter: Maximum number of halvings

    Returns:
        Array of roots
    """
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    f_lo = f(lo)
    f_hi = f(hi)
    if np.any(np.sign(f_lo) * np.sign(f_hi) > 0):
        bad = int(np.argmax(np.sign(f_lo) * np.sign(f_hi) > 0))
        raise BracketError(
            ERROR_NO_SIGN_CHANGE.format(lo[bad], hi[bad], f_lo[bad], f_hi[bad])
        )
    lo_positive = f_lo > 0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if np.all(hi - lo <= tol * np.maximum(1.0, np.abs(mid))):
            return mid
        f_mid = f(mid)
        move_lo = (f_mid > 0) == lo_positive
        lo = np.where(move_lo, mid, lo)
        hi = np.where(move_lo, hi, mid)
    raise ConvergenceError(
        f"Bisection did not converge in {max_iter} halvings", best_estimate=None
    )


def _initial_simplex(
    x0: np.ndarray, step: Union[float, Sequence[float]], bounds: Optional[Bounds]
) -> np.ndarray:
    steps = np.broadcast_to(np.asarray(step, dtype=float), x0.shape)
    simplex = [x0]
    for i in range(x0.size):
        vertex = x0.copy()
        vertex[i] += steps[i]
        if bounds is not None:
            lo, hi = bounds[i]
            outside = (hi is not None and vertex[i] > hi) or (
                lo is not None and vertex[i] < lo
            )
            if outside:
                vertex[i] = x0[i] - steps[i]
        simplex.append(vertex)
    return np.array(simplex)


def minimize(
    f: Callable[[np.ndarray], float],
    x0: Sequence[float],
    bounds: Optional[Bounds] = None,
    tol: float = DEFAULT_OPTIM_TOL,
    max_iter: int = DEFAULT_OPTIM_MAX_ITER,
    step: Optional[Union[float, Sequence[float]]] = None,
) -> OptimResult:
    """
    Minimize f with the Nelder-Mead simplex, projecting onto box bounds.

    Non-finite objective values are treated as +inf so that the simplex
    retreats from inadmissible regions. The returned objective never exceeds
    f(x0).

    Args:
        f: Objective on a parameter vector
        x0: Starting point, inside the bounds
        bounds: Optional (lo, hi) pairs; None means unbounded on that side
        tol: Absolute tolerance on both simplex diameter and objective spread
        max_iter: Iteration cap
        step: Initial simplex edge length(s); scipy's default when omitted

    Returns:
        OptimResult
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if bounds is not None:
        if len(bounds) != x0.size:
            raise InvalidInputError("bounds must give one pair per coordinate")
        for value, (lo, hi) in zip(x0, bounds):
            if (lo is not None and value < lo) or (hi is not None and value > hi):
                raise InvalidInputError(f"x0={x0.tolist()} lies outside {list(bounds)}")

    f0 = float(f(x0))
    if not np.isfinite(f0):
        raise OptimizationError(ERROR_OBJECTIVE_NON_FINITE.format(x0.tolist()))

    def objective(x: np.ndarray) -> float:
        value = float(f(x))
        return value if np.isfinite(value) else np.inf

    options = {"xatol": tol, "fatol": tol, "maxiter": max_iter}
    if step is not None:
        options["initial_simplex"] = _initial_simplex(x0, step, bounds)
    res = optimize.minimize(
        objective, x0, method="Nelder-Mead", bounds=bounds, options=options
    )
    if not np.isfinite(res.fun):
        raise OptimizationError("Objective non-finite along the whole search")
    if res.fun > f0:
        logger.debug("Simplex ended above the start value; returning x0")
        return OptimResult(
            argmin=tuple(x0.tolist()), objective=f0, converged=False, iterations=res.nit
        )
    return OptimResult(
        argmin=tuple(np.asarray(res.x, dtype=float).tolist()),
        objective=float(res.fun),
        converged=bool(res.success),
        iterations=int(res.nit),
    )


def minimize_scalar(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = DEFAULT_OPTIM_TOL,
    scan_points: int = 0,
) -> OptimResult:
    """
    Minimize a function of one variable on [lo, hi].

    With scan_points > 0, f is first evaluated on an even grid and the
    bounded Brent search is restricted to the cell around the best grid
    point, which guards against distant local minima.

    Args:
        f: Objective of one real argument
        lo: Left end of the search interval
        hi: Right end of the search interval
        tol: Absolute tolerance on the argument
        scan_points: Number of coarse grid points

    Returns:
        OptimResult with a one-element argmin
    """
    if not lo < hi:
        raise InvalidInputError(f"minimize_scalar requires lo < hi, got [{lo}, {hi}]")
    best_x, best_f = None, np.inf
    if scan_points > 0:
        grid = np.linspace(lo, hi, scan_points)
        values = np.array([f(x) for x in grid], dtype=float)
        values[~np.isfinite(values)] = np.inf
        if not np.any(np.isfinite(values)):
            raise OptimizationError(f"Objective non-finite on the scan of [{lo}, {hi}]")
        i = int(np.argmin(values))
        best_x, best_f = float(grid[i]), float(values[i])
        lo, hi = float(grid[max(i - 1, 0)]), float(grid[min(i + 1, scan_points - 1)])

    def objective(x: float) -> float:
        value = float(f(x))
        return value if np.isfinite(value) else np.inf

    res = optimize.minimize_scalar(
        objective, bounds=(lo, hi), method="bounded", options={"xatol": tol}
    )
    x, fx = float(res.x), float(res.fun)
    if best_x is not None and best_f < fx:
        x, fx = best_x, best_f
    if not np.isfinite(fx):
        raise OptimizationError(f"Objective non-finite along [{lo}, {hi}]")
    return OptimResult(
        argmin=(x,), objective=fx, converged=bool(res.success), iterations=int(res.nfev)
    )


@validate_inputs(
    lambda z, a, b: 0.0 <= z <= 1.0 and a > 0.0 and b > 0.0,
    "requires 0 <= z <= 1, a > 0 and b > 0",
)
def incomplete_beta(z: float, a: float, b: float) -> float:
    """Unregularized incomplete beta integral of t^(a-1) (1-t)^(b-1) over [0, z]."""
    return float(special.betainc(a, b, z) * special.beta(a, b))
