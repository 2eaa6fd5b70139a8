"""Numeric backends for the telescope's inverse-branch pullbacks.

Pullbacks are carried in offset coordinates u = z - z_k so regions far
smaller than an ulp of the orbit point keep full relative precision. The
double backend works on numpy complex128 arrays; the multi-precision
backend holds mpmath ``mpc`` values in numpy object arrays and evaluates
under a fixed mantissa width.
"""

import cmath
import contextlib
import logging
import math
from typing import Sequence

import mpmath
import numpy as np

from dynamics.errors import PrecisionExhausted

logger = logging.getLogger(__name__)

# Smallest radius the double backend accepts before deferring to more bits.
DOUBLE_LOG_FLOOR = math.log(1e-280)


class Backend:
    """Elementwise complex arithmetic used by the pullback tracer."""

    bits: int = 53

    @property
    def name(self) -> str:
        return f"{type(self).__name__}({self.bits})"

    def circle(self, log_radius: float, unit: np.ndarray) -> np.ndarray:
        """exp(log_radius) * unit, with unit a complex128 array of |u| <= 1."""
        raise NotImplementedError

    def precision(self):
        """Context in which array arithmetic runs at this backend's width."""
        return contextlib.nullcontext()

    def scalar(self, value: complex):
        raise NotImplementedError

    def exp(self, value):
        raise NotImplementedError

    def normalized(self, x: np.ndarray) -> np.ndarray:
        """x / max|x| as complex128; all-zero input is returned as zeros."""
        raise NotImplementedError

    def log1p(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def expm1(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def imag_float(self, x: np.ndarray) -> np.ndarray:
        """Imaginary parts as float64; only used on O(1) angles."""
        raise NotImplementedError

    def to_complex(self, x: np.ndarray) -> np.ndarray:
        """Lossy conversion to complex128 for geometry and output."""
        raise NotImplementedError

    def unwrap(self, log_values: np.ndarray) -> np.ndarray:
        """Continue a logarithm along the path by removing 2*pi jumps."""
        steps = np.diff(self.imag_float(log_values))
        turns = np.concatenate(([0.0], np.cumsum(np.round(steps / (2 * math.pi)))))
        if not turns.any():
            return log_values
        return log_values - self.scalar(2j * math.pi) * self._lift(turns)

    def _lift(self, values: np.ndarray) -> np.ndarray:
        return values


class DoubleBackend(Backend):
    """IEEE double precision on complex128 arrays."""

    bits = 53

    def circle(self, log_radius: float, unit: np.ndarray) -> np.ndarray:
        if log_radius < DOUBLE_LOG_FLOOR:
            raise PrecisionExhausted(
                f"radius exp({log_radius:.6g}) is below the double-precision floor"
            )
        return math.exp(log_radius) * unit

    def scalar(self, value: complex) -> complex:
        return complex(value)

    def exp(self, value: complex) -> complex:
        return cmath.exp(value)

    def normalized(self, x: np.ndarray) -> np.ndarray:
        scale = np.max(np.abs(x)) if len(x) else 0.0
        return x / scale if scale > 0 else np.zeros_like(x)

    def log1p(self, x: np.ndarray) -> np.ndarray:
        re = x.real
        im = x.imag
        with np.errstate(all="ignore"):
            modulus = 0.5 * np.log1p(2.0 * re + re * re + im * im)
            angle = np.arctan2(im, 1.0 + re)
        return modulus + 1j * angle

    def expm1(self, x: np.ndarray) -> np.ndarray:
        re = x.real
        im = x.imag
        with np.errstate(all="ignore"):
            half = np.sin(0.5 * im)
            real = np.expm1(re) * np.cos(im) - 2.0 * half * half
            imag = np.exp(re) * np.sin(im)
        return real + 1j * imag

    def imag_float(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x).imag

    def to_complex(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=np.complex128)


def _mp_log1p(x):
    if not x:
        return mpmath.mpc(0)
    magnitude = mpmath.mag(x)
    if magnitude < -mpmath.mp.prec:
        return x - x * x / 2
    with mpmath.extraprec(max(0, -magnitude) + 10):
        return mpmath.log(1 + x)


def _mp_expm1(x):
    return mpmath.expm1(x)


class MultiPrecisionBackend(Backend):
    """mpmath arithmetic at a fixed mantissa width.

    Elementwise helpers enter ``mpmath.workprec(bits)`` themselves; plain
    array arithmetic on ``mpc`` objects must run inside :meth:`precision`.
    """

    def __init__(self, bits: int):
        if bits < 53:
            raise ValueError(f"bits must be >= 53, got: {bits}")
        self.bits = bits
        self._log1p = np.frompyfunc(_mp_log1p, 1, 1)
        self._expm1 = np.frompyfunc(_mp_expm1, 1, 1)
        self._imag = np.frompyfunc(lambda v: float(mpmath.im(v)), 1, 1)
        self._complex = np.frompyfunc(lambda v: complex(v), 1, 1)

    def precision(self):
        return mpmath.workprec(self.bits)

    def circle(self, log_radius: float, unit: np.ndarray) -> np.ndarray:
        with mpmath.workprec(self.bits):
            radius = mpmath.exp(mpmath.mpf(log_radius))
            return np.array([radius * mpmath.mpc(u.real, u.imag) for u in unit], dtype=object)

    def scalar(self, value: complex):
        with mpmath.workprec(self.bits):
            return mpmath.mpc(value.real, value.imag)

    def exp(self, value):
        with mpmath.workprec(self.bits):
            return mpmath.exp(value)

    def normalized(self, x: np.ndarray) -> np.ndarray:
        with mpmath.workprec(self.bits):
            scale = max((abs(v) for v in x), default=mpmath.mpf(0))
            if not scale:
                return np.zeros(len(x), dtype=np.complex128)
            return self.to_complex(x / scale)

    def log1p(self, x: np.ndarray) -> np.ndarray:
        with mpmath.workprec(self.bits):
            return self._log1p(x)

    def expm1(self, x: np.ndarray) -> np.ndarray:
        with mpmath.workprec(self.bits):
            return self._expm1(x)

    def imag_float(self, x: np.ndarray) -> np.ndarray:
        return self._imag(x).astype(np.float64)

    def to_complex(self, x: np.ndarray) -> np.ndarray:
        return self._complex(x).astype(np.complex128)

    def _lift(self, values: np.ndarray) -> np.ndarray:
        return np.array([mpmath.mpf(v) for v in values], dtype=object)

    def unwrap(self, log_values: np.ndarray) -> np.ndarray:
        with mpmath.workprec(self.bits):
            return super().unwrap(log_values)


def backend_for(bits: int) -> Backend:
    """The double backend for 53 bits, multi-precision otherwise."""
    backend = DoubleBackend() if bits <= 53 else MultiPrecisionBackend(bits)
    logger.debug(f"Using {backend.name}")
    return backend


def unit_circle_with_spoke(s: Sequence[float]) -> np.ndarray:
    """Points of the parameter path on the unit disk.

    s in [0, 1] walks the spoke from the center to 1; s in [1, 2] walks the
    unit circle once counter-clockwise, closing at s = 2.
    """
    s = np.asarray(s, dtype=np.float64)
    spoke = s <= 1.0
    angle = 2.0 * math.pi * (s - 1.0)
    circle = np.cos(angle) + 1j * np.sin(angle)
    return np.where(spoke, s.astype(np.complex128), circle)

