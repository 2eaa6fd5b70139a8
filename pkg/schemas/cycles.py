"""Cycle schemas."""

from typing import List, Optional

from pydantic import BaseModel, Field, field_validator


class Cycle(BaseModel):
    """One periodic orbit of the map."""
    points: List[complex] = Field(..., description="Points of one period, in orbit order")
    period: int = Field(..., description="Minimal period")
    multiplier: complex = Field(..., description="Product of f' over the cycle")
    max_modulus: float = Field(..., description="max |p| over the cycle")

    @field_validator("period")
    @classmethod
    def validate_period(cls, v: int) -> int:
        """Validate period is positive."""
        if v < 1:
            raise ValueError(f"period must be >= 1, got: {v}")
        return v

    @property
    def is_attracting(self) -> bool:
        return abs(self.multiplier) < 1

    def to_record(self) -> dict:
        """JSON-friendly record with [re, im] pairs."""
        return {
            "period": self.period,
            "points": [[p.real, p.imag] for p in self.points],
            "multiplier": [self.multiplier.real, self.multiplier.imag],
            "max_modulus": self.max_modulus,
        }


class BasinVerdict(BaseModel):
    """Outcome of basin detection: InBasin(cycle) or NotDetected."""
    in_basin: bool = Field(..., description="True when an attracting cycle was detected")
    cycle: Optional[Cycle] = Field(default=None, description="The attracting cycle")
    steps: int = Field(default=0, description="Iterations used")
    reason: str = Field(default="", description="Why nothing was detected")
