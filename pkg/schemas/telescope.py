"""Telescope schemas: radii, moduli, traced regions and the tail distribution."""

import math
from typing import List, Optional, Sequence

from pydantic import BaseModel, Field, model_validator


class PullbackRegion(BaseModel):
    """A traced pullback of a circle around z_n, stored relative to its center.

    Offsets keep full relative precision for regions far below the size of
    an ulp of the center.
    """
    level: int = Field(..., description="Orbit index j of the region")
    center: complex = Field(..., description="z_j")
    boundary_offsets: List[complex] = Field(..., description="Closed polyline minus center")

    @property
    def boundary(self) -> List[complex]:
        return [self.center + w for w in self.boundary_offsets]

    def to_record(self) -> dict:
        """JSON-friendly record for external plotting."""
        return {
            "level": self.level,
            "center": [self.center.real, self.center.imag],
            "boundary": [[p.real, p.imag] for p in self.boundary],
        }


class TelescopeResult(BaseModel):
    """Radii tau_0..tau_n and moduli m_i = log(tau_{i+1} / tau_i)."""
    n: int = Field(..., description="Orbit length")
    tau: List[float] = Field(..., description="tau_0 .. tau_n")
    log_tau: List[float] = Field(..., description="log tau_i, exact even when tau_i underflows")
    m: List[float] = Field(..., description="m_0 .. m_{n-1}")
    precision_bits: int = Field(default=53, description="Mantissa bits used")
    samples: int = Field(default=256, description="Initial circle samples")
    bisect_tol: float = Field(default=1e-6, description="Relative bisection tolerance")
    koebe_margin: Optional[float] = Field(
        default=None, description="log|(f^n)'(z_0)| - log(tau_0 / (4 (M_f + |z_0|)))"
    )

    @model_validator(mode="after")
    def validate_profile(self) -> "TelescopeResult":
        """Validate lengths, monotonicity and non-negative moduli."""
        if len(self.tau) != self.n + 1 or len(self.log_tau) != self.n + 1:
            raise ValueError("tau and log_tau must have n + 1 entries")
        if len(self.m) != self.n:
            raise ValueError("m must have n entries")
        for i in range(self.n):
            if self.log_tau[i] > self.log_tau[i + 1]:
                raise ValueError(f"tau must be non-decreasing, violated at i={i}")
            if self.m[i] < 0:
                raise ValueError(f"m_{i} must be non-negative, got: {self.m[i]}")
        return self

    @property
    def telescoping_residual(self) -> float:
        """|log tau_0 - (log tau_n - sum m_i)|."""
        return abs(self.log_tau[0] - (self.log_tau[self.n] - math.fsum(self.m)))

    def positive_indices(self) -> List[int]:
        """Indices i with m_i > 0."""
        return [i for i, value in enumerate(self.m) if value > 0]


class TailDistribution(BaseModel):
    """The step function F(m) = #{i : m_i >= m}."""
    n: int = Field(..., description="Number of moduli")
    sorted_m: List[float] = Field(..., description="Positive m_i, descending, with multiplicity")

    @model_validator(mode="after")
    def validate_sorted(self) -> "TailDistribution":
        """Validate the stored moduli are positive and descending."""
        if len(self.sorted_m) > self.n:
            raise ValueError("more positive moduli than n")
        for prev, cur in zip(self.sorted_m, self.sorted_m[1:]):
            if cur > prev:
                raise ValueError("sorted_m must be descending")
        if self.sorted_m and self.sorted_m[-1] <= 0:
            raise ValueError("sorted_m must hold positive values only")
        return self

    @classmethod
    def from_moduli(cls, m: Sequence[float]) -> "TailDistribution":
        return cls(n=len(m), sorted_m=sorted((x for x in m if x > 0), reverse=True))

    @property
    def max_m(self) -> float:
        return self.sorted_m[0] if self.sorted_m else 0.0

    def evaluate(self, m: float) -> int:
        """F(m); every m_i >= 0 counts for m <= 0."""
        if m <= 0:
            return self.n
        count = 0
        for value in self.sorted_m:
            if value < m:
                break
            count += 1
        return count

    __call__ = evaluate

    def indices_at_least(self, moduli: Sequence[float], m: float) -> List[int]:
        """The ordered index set I_m for the producing moduli list."""
        return [i for i, value in enumerate(moduli) if value >= m]

    def integral(self) -> float:
        """Integral of F over (0, inf) as a sum of rectangles.

        Summation by parts over the distinct jump points; equals the plain
        sum of the moduli.
        """
        distinct = sorted(set(self.sorted_m))
        rectangles = []
        previous = 0.0
        for value in distinct:
            rectangles.append(self.evaluate(value) * (value - previous))
            previous = value
        return math.fsum(rectangles)

    def integral_between(self, a: float, b: float) -> float:
        """Integral of F over [a, b) for 0 <= a <= b (b may be inf)."""
        if a < 0 or b < a:
            raise ValueError(f"need 0 <= a <= b, got a={a}, b={b}")
        return math.fsum(max(0.0, min(value, b) - a) for value in self.sorted_m)

    def total(self) -> float:
        """Plain compensated sum of the moduli."""
        return math.fsum(self.sorted_m)
