"""
Decorators guarding risk and estimation operations.
"""

import functools
import logging
from typing import Any, Callable, List, Optional, Tuple, TypeVar

from .exceptions import InfiniteMeanError, InvalidInputError, ParetoRiskError
from .utils.patterns import ERROR_INFINITE_MEAN
from .utils.utils import tail_index_of

logger = logging.getLogger(__name__)

T = TypeVar("T", bound=Callable[..., Any])


def requires_finite_mean(func: T) -> T:
    """
    Reject tail models whose mean is infinite.

    The first positional argument of the decorated function must be a tail
    model, a TailFit or a ComposedTail.

    Args:
        func: The function to decorate

    Returns:
        Decorated function raising InfiniteMeanError when alpha <= 1
    """

    @functools.wraps(func)
    def wrapper(target, *args, **kwargs):
        alpha = tail_index_of(target)
        if alpha <= 1.0:
            raise InfiniteMeanError(ERROR_INFINITE_MEAN.format(alpha))
        return func(target, *args, **kwargs)

    return wrapper


def validate_inputs(validator_func: Callable[..., bool], message: str):
    """
    Apply custom validation to function inputs.

    The validator receives the same arguments as the decorated function.
    If it returns False, InvalidInputError is raised before the function runs.

    Args:
        validator_func: Function that validates inputs and returns bool
        message: Error message used when validation fails

    Returns:
        Decorator function that applies input validation
    """

    def decorator(func: T) -> T:
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            if not validator_func(*args, **kwargs):
                raise InvalidInputError(f"{func.__name__}: {message}")
            return func(*args, **kwargs)

        return wrapper

    return decorator


def record_failures(label: Optional[str] = None):
    """
    Turn package errors into recorded notes instead of exceptions.

    Used for per-point evaluations inside series builders, where a failing
    point becomes a gap rather than aborting the whole series.

    Args:
        label: Prefix for recorded notes. Defaults to the function name.

    Returns:
        Decorator whose wrapped function returns (result or None, notes)
    """

    def decorator(func: Callable[..., Any]) -> Callable[..., Tuple[Any, List[str]]]:
        prefix = label or func.__name__

        @functools.wraps(func)
        def wrapper(*args, **kwargs) -> Tuple[Any, List[str]]:
            try:
                return func(*args, **kwargs), []
            except ParetoRiskError as exc:
                note = f"{prefix}: {type(exc).__name__}: {exc}"
                logger.debug(note)
                return None, [note]

        return wrapper

    return decorator
