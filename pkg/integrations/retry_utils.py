"""Retry utilities: precision escalation for numerically fragile runs."""

import logging
from functools import wraps
from typing import Callable, List, TypeVar

from tenacity import (
    Retrying,
    before_sleep_log,
    retry_if_exception_type,
    stop_after_attempt,
)

from dynamics.errors import PrecisionExhausted

logger = logging.getLogger(__name__)

T = TypeVar("T")

DEFAULT_ATTEMPTS = 3


def precision_schedule(start_bits: int = 53, attempts: int = DEFAULT_ATTEMPTS) -> List[int]:
    """Mantissa widths tried in order: start, 2*start, 4*start, ..."""
    if start_bits < 53:
        raise ValueError(f"start_bits must be >= 53, got: {start_bits}")
    if attempts < 1:
        raise ValueError(f"attempts must be >= 1, got: {attempts}")
    return [start_bits * 2 ** k for k in range(attempts)]


def run_with_precision_escalation(
    run: Callable[[int], T],
    start_bits: int = 53,
    attempts: int = DEFAULT_ATTEMPTS,
) -> T:
    """Call ``run(bits)``, doubling bits after each PrecisionExhausted.

    The last failure is re-raised unchanged.
    """
    schedule = precision_schedule(start_bits, attempts)
    for attempt in Retrying(
        stop=stop_after_attempt(len(schedule)),
        retry=retry_if_exception_type(PrecisionExhausted),
        before_sleep=before_sleep_log(logger, logging.WARNING),
        reraise=True,
    ):
        with attempt:
            bits = schedule[attempt.retry_state.attempt_number - 1]
            if bits != start_bits:
                logger.warning(f"Retrying at {bits} mantissa bits")
            return run(bits)
    raise AssertionError("unreachable")  # pragma: no cover


def precision_retry(start_bits: int = 53, attempts: int = DEFAULT_ATTEMPTS) -> Callable:
    """Decorator form for functions taking a ``bits`` keyword argument."""
    def decorator(func: Callable[..., T]) -> Callable[..., T]:
        @wraps(func)
        def wrapper(*args, **kwargs) -> T:
            first = kwargs.pop("bits", start_bits)
            return run_with_precision_escalation(
                lambda bits: func(*args, bits=bits, **kwargs), first, attempts
            )
        return wrapper
    return decorator
