"""Orbit and geometry-constant schemas."""

import math
from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, Field, field_validator, model_validator


class OrbitStatus(str, Enum):
    """How an orbit computation terminated."""
    COMPLETE = "complete"
    OVERFLOWED = "overflowed"
    HIT_SINGULAR = "hit_singular"


class Orbit(BaseModel):
    """A finite orbit z_0..z_n with its log-derivatives.

    ``chi_prefix[k]`` is the Birkhoff average over the first k steps, with
    ``chi_prefix[0] = 0``.
    """
    z: List[complex] = Field(..., description="Orbit points z_0 .. z_n")
    log_abs_deriv: List[float] = Field(..., description="log|f'(z_i)| for i < n")
    chi_prefix: List[float] = Field(..., description="chi_k for k = 0 .. n")
    status: OrbitStatus = Field(default=OrbitStatus.COMPLETE)
    stopped_at: Optional[int] = Field(
        default=None, description="Step where iteration stopped or first met the singular value"
    )

    @model_validator(mode="after")
    def validate_lengths(self) -> "Orbit":
        """Validate the list lengths agree."""
        if len(self.log_abs_deriv) != len(self.z) - 1:
            raise ValueError("log_abs_deriv must have one entry per step")
        if len(self.chi_prefix) != len(self.z):
            raise ValueError("chi_prefix must have one entry per orbit point")
        return self

    @property
    def n(self) -> int:
        """Number of recorded steps."""
        return len(self.z) - 1

    @property
    def is_complete(self) -> bool:
        """All requested steps were recorded (no escape)."""
        return self.status != OrbitStatus.OVERFLOWED

    def log_derivative(self, k: Optional[int] = None) -> float:
        """log|(f^k)'(z_0)| as a compensated sum; defaults to k = n."""
        k = self.n if k is None else k
        return math.fsum(self.log_abs_deriv[:k])

    def chi(self, k: Optional[int] = None) -> float:
        """Finite-time exponent chi_k; defaults to k = n."""
        return self.chi_prefix[self.n if k is None else k]

    def liminf_proxy(self, window: Optional[int] = None) -> float:
        """Minimum of chi_k over the trailing window k in (n - window, n]."""
        if self.n == 0:
            return 0.0
        window = window or max(1, self.n // 10)
        start = max(1, self.n - window + 1)
        return min(self.chi_prefix[start:self.n + 1])

    def _prefix_status(self, k: int) -> OrbitStatus:
        if self.status == OrbitStatus.HIT_SINGULAR and self.stopped_at is not None:
            return self.status if self.stopped_at <= k else OrbitStatus.COMPLETE
        return self.status if k >= self.n else OrbitStatus.COMPLETE

    def prefix(self, k: int) -> "Orbit":
        """The orbit truncated to z_0 .. z_k."""
        return Orbit(
            z=self.z[:k + 1],
            log_abs_deriv=self.log_abs_deriv[:k],
            chi_prefix=self.chi_prefix[:k + 1],
            status=self._prefix_status(k),
            stopped_at=self.stopped_at if self._prefix_status(k) != OrbitStatus.COMPLETE else None,
        )


class GeometryConstants(BaseModel):
    """delta_n, D_n, M_f and the derived radii for one (map, orbit, n)."""
    n: int = Field(..., description="Orbit length the constants refer to")
    delta_n: float = Field(..., description="min{1/2, min_i d(z_i, S)}")
    D_n: float = Field(..., description="max_i |z_i| + 1")
    M_f: float = Field(..., description="Cycle constant (upper-bound estimate)")
    S_f: Optional[float] = Field(default=None, description="sup|s| + 1 for bounded S")
    rho_n: float = Field(..., description="4 (D_n + M_f) / delta_n")
    rho_tilde_n: Optional[float] = Field(default=None, description="4 (S_f + M_f) / delta_n")
    m_max: float = Field(..., description="2 + log rho_n")
    m_tilde_max: Optional[float] = Field(default=None, description="2 + log rho_tilde_n")

    @field_validator("delta_n")
    @classmethod
    def validate_delta(cls, v: float) -> float:
        """Validate 0 < delta_n <= 1/2."""
        if not 0 < v <= 0.5:
            raise ValueError(f"delta_n must lie in (0, 1/2], got: {v}")
        return v

    @field_validator("D_n", "M_f")
    @classmethod
    def validate_at_least_one(cls, v: float) -> float:
        """Validate D_n >= 1 and M_f >= 1."""
        if v < 1:
            raise ValueError(f"value must be >= 1, got: {v}")
        return v

    @model_validator(mode="after")
    def validate_rho(self) -> "GeometryConstants":
        """Validate rho_n >= 16 and rho_tilde_n >= 16."""
        if self.rho_n < 16:
            raise ValueError(f"rho_n must be >= 16, got: {self.rho_n}")
        if self.rho_tilde_n is not None and self.rho_tilde_n < 16:
            raise ValueError(f"rho_tilde_n must be >= 16, got: {self.rho_tilde_n}")
        return self

    @classmethod
    def from_parts(
        cls,
        n: int,
        delta_n: float,
        D_n: float,
        M_f: float,
        S_f: Optional[float] = None,
    ) -> "GeometryConstants":
        """Derive rho_n, rho_tilde_n and the cutoffs from the base quantities."""
        rho_n = 4.0 * (D_n + M_f) / delta_n
        rho_tilde_n = 4.0 * (S_f + M_f) / delta_n if S_f is not None else None
        return cls(
            n=n,
            delta_n=delta_n,
            D_n=D_n,
            M_f=M_f,
            S_f=S_f,
            rho_n=rho_n,
            rho_tilde_n=rho_tilde_n,
            m_max=2.0 + math.log(rho_n),
            m_tilde_max=2.0 + math.log(rho_tilde_n) if rho_tilde_n is not None else None,
        )

    @property
    def bounded_type(self) -> bool:
        return self.S_f is not None

    def cutoff(self, bounded_type: bool = False) -> float:
        """m_max, or the orbit-independent m_tilde_max when requested."""
        if bounded_type:
            if self.m_tilde_max is None:
                raise ValueError("m_tilde_max requires a bounded singular set")
            return self.m_tilde_max
        return self.m_max
