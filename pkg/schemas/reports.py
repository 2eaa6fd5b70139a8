"""Bound parameters and report schemas."""

import math
from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class ANRule(str, Enum):
    """Choice of the split point a_n between the two small-m intervals."""
    POWER_FIFTH = "power_fifth"
    INVERSE_LOG = "inverse_log"
    INVERSE_LOG_LOG = "inverse_log_log"
    BOUNDED_INVERSE_LOG = "bounded_inverse_log"


class MfProvenance(str, Enum):
    """Whether M_f is exact or an upper bound from a finite cycle search."""
    EXACT = "exact"
    UPPER_BOUND = "upper_bound"


class BoundParams(BaseModel):
    """Stand-ins for the unspecified constants of the bounds."""
    gamma: float = Field(default=0.5, description="Exponent slack, 0 < gamma < 1")
    C_abs: float = Field(default=1.0, description="Absolute constant C")
    c1: float = Field(default=1.0)
    c2: float = Field(default=1.0)
    c3: float = Field(default=1.0)
    c4: float = Field(default=1.0)
    c5: float = Field(default=1.0)
    c6: float = Field(default=1.0)
    a_n_rule: ANRule = Field(default=ANRule.POWER_FIFTH)

    @field_validator("gamma")
    @classmethod
    def validate_gamma(cls, v: float) -> float:
        """Validate gamma lies in (0, 1)."""
        if not 0 < v < 1:
            raise ValueError(f"gamma must lie in (0, 1), got: {v}")
        return v

    @field_validator("C_abs", "c1", "c2", "c3", "c4", "c5", "c6")
    @classmethod
    def validate_positive(cls, v: float) -> float:
        """Validate constants are positive."""
        if v <= 0:
            raise ValueError(f"constants must be positive, got: {v}")
        return v

    def a_n(self, n: int) -> float:
        """Split point a_n, clamped to (0, 2]."""
        if n < 1:
            raise ValueError(f"n must be >= 1, got: {n}")
        if self.a_n_rule == ANRule.POWER_FIFTH:
            value = n ** -0.2
        elif self.a_n_rule == ANRule.INVERSE_LOG:
            value = 1.0 / math.log(n) if n > 1 else math.inf
        elif self.a_n_rule == ANRule.BOUNDED_INVERSE_LOG:
            value = 3.0 * self.c6 / math.log(n) if n > 1 else math.inf
        else:
            loglog = math.log(math.log(n)) if n > 2 else 0.0
            value = self.c6 / loglog if loglog > 0 else math.inf
        return min(value, 2.0)


class ClaimRecord(BaseModel):
    """One checked inequality with its measured slack."""
    model_config = ConfigDict(ser_json_inf_nan="constants")

    claim_id: str = Field(..., description="Stable identifier of the inequality")
    inputs: Dict[str, Any] = Field(default_factory=dict)
    measured_margin: float = Field(..., description="RHS - LHS slack; >= 0 means holds")
    passed: bool = Field(..., description="measured_margin >= 0")
    vacuous: bool = Field(default=False, description="Nothing to check")
    constant_free: bool = Field(default=True, description="Independent of C, c1..c6")
    M_f_provenance: MfProvenance = Field(default=MfProvenance.UPPER_BOUND)

    @model_validator(mode="after")
    def validate_pass_flag(self) -> "ClaimRecord":
        """Validate passed agrees with the sign of the margin."""
        if self.passed != (self.measured_margin >= 0):
            raise ValueError("passed must be equivalent to measured_margin >= 0")
        return self

    @property
    def blocking_failure(self) -> bool:
        """A non-vacuous constant-free check that failed."""
        return self.constant_free and not self.vacuous and not self.passed


class IntegralPart(BaseModel):
    """Empirical integral of F over one interval and its analytic cap."""
    model_config = ConfigDict(ser_json_inf_nan="constants")

    interval: List[float] = Field(..., description="[lower, upper)")
    empirical: float
    cap: float
    constant_free: bool = True


class IntegralSplit(BaseModel):
    """The four-interval split of the integral of F."""
    model_config = ConfigDict(ser_json_inf_nan="constants")

    a_n: float
    cutoff: float
    parts: List[IntegralPart]
    total: float = Field(..., description="Sum of the moduli")
    minimal_c1: Optional[float] = Field(default=None, description="Smallest c1 for the [a_n, 2) cap")


class FinalBounds(BaseModel):
    """Log-scale values of the final lower bounds."""
    model_config = ConfigDict(ser_json_inf_nan="constants")

    log_measured_derivative: float
    base_der_bound_rhs: float
    koebe_bound_rhs: float
    general_rhs: float = Field(..., description="log RHS of the general-case bound")
    bounded_type_rhs: Optional[float] = Field(default=None, description="log RHS for bounded singular sets")
    minimal_C_general: float = Field(..., description="Smallest C with general_rhs <= base bound")
    minimal_C_general_measured: float = Field(..., description="Smallest C with general_rhs <= measured")
    minimal_C_bounded_type: Optional[float] = None


class BoundReport(BaseModel):
    """All claim checks for one run plus the final bounds."""
    model_config = ConfigDict(ser_json_inf_nan="constants")

    map: str
    z0: List[float]
    n: int
    M_f_provenance: MfProvenance = MfProvenance.UPPER_BOUND
    constants: Dict[str, Optional[float]] = Field(default_factory=dict)
    claims: List[ClaimRecord] = Field(default_factory=list)
    integral_split: Optional[IntegralSplit] = None
    final: Optional[FinalBounds] = None

    @property
    def passed(self) -> bool:
        return not any(claim.blocking_failure for claim in self.claims)

    def failures(self) -> List[ClaimRecord]:
        return [claim for claim in self.claims if claim.blocking_failure]


class EnvelopePoint(BaseModel):
    """Lower envelope of chi_n next to the measured chi_n."""
    model_config = ConfigDict(ser_json_inf_nan="constants")

    n: int
    chi_n: float
    liminf_proxy: float
    envelope: float
    log_rho_n: float
    sum_m: float
    delta_n: float
    D_n: float
