"""Closed-form conformal geometry: modulus brackets, separation, Koebe, alpha, E, D."""

import logging
import math
import sys
from enum import Enum
from typing import Tuple

from pydantic import BaseModel, Field

from dynamics.errors import DomainError

logger = logging.getLogger(__name__)

PI2 = math.pi ** 2
# Largest argument math.exp accepts without overflow.
EXP_LIMIT = math.log(sys.float_info.max)


class SeparationBranch(str, Enum):
    """Which term of the separation maximum is active."""
    EXPONENTIAL = "exponential"
    RECIPROCAL = "reciprocal"


class SeparationBound(BaseModel):
    """max{e^m / 16 - 1, 16 e^(-pi^2 / m)} for an annulus of modulus m."""
    m: float = Field(..., description="Modulus, > 0")
    factor: float = Field(..., description="The separation factor")
    active_branch: SeparationBranch = Field(..., description="Term attaining the maximum")


def _require_positive(name: str, value: float) -> None:
    if not value > 0:
        raise DomainError(f"{name} must be positive, got: {value}")


def lambda_brackets(R: float) -> Tuple[float, float]:
    """Bracket [log 16R, log 16(R+1)] for the extremal modulus Lambda(R)."""
    if not R > 1:
        raise DomainError(f"R must exceed 1, got: {R}")
    return math.log(16.0 * R), math.log(16.0 * (R + 1.0))


def separation_factor(m: float) -> SeparationBound:
    """Lower bound for |e3 - e1| / |e2 - e1| across an annulus of modulus m."""
    _require_positive("m", m)
    exponential = math.expm1(m) / 16.0 - 15.0 / 16.0 if m < EXP_LIMIT else math.inf
    reciprocal = 16.0 * math.exp(-PI2 / m)
    if exponential >= reciprocal:
        return SeparationBound(m=m, factor=exponential, active_branch=SeparationBranch.EXPONENTIAL)
    return SeparationBound(m=m, factor=reciprocal, active_branch=SeparationBranch.RECIPROCAL)


def alpha(m: float) -> float:
    """(2/m + 1)^2."""
    _require_positive("m", m)
    return (2.0 / m + 1.0) ** 2


def spacing_gap_E(m: float, rho: float) -> int:
    """E(m) = floor(log(9 rho alpha(m)) / m); at least 1 below m_max = 2 + log rho."""
    _require_positive("m", m)
    if rho < 16:
        raise DomainError(f"rho must be >= 16, got: {rho}")
    value = math.floor(math.log(9.0 * rho * alpha(m)) / m)
    if m < 2.0 + math.log(rho):
        assert value >= 1, f"E({m}) = {value} < 1 below m_max"
    return value


def orbit_bound_D(m: float, M_f: float, S_f: float) -> float:
    """D(m) = S_f + (M_f + S_f) e^(pi^2/m) / 16; inf when the exponent overflows."""
    _require_positive("m", m)
    if M_f < 1 or S_f < 1:
        raise DomainError(f"M_f and S_f must be >= 1, got: {M_f}, {S_f}")
    exponent = PI2 / m
    if exponent > EXP_LIMIT:
        logger.debug(f"D(m) overflows for m={m}")
        return math.inf
    return S_f + (M_f + S_f) * math.exp(exponent) / 16.0


def koebe_distortion_envelope(w_abs: float) -> Tuple[float, float]:
    """Growth bounds |w|/(1+|w|)^2 and |w|/(1-|w|)^2 for normalized univalent maps."""
    if not 0 < w_abs < 1:
        raise DomainError(f"w_abs must lie in (0, 1), got: {w_abs}")
    return w_abs / (1.0 + w_abs) ** 2, w_abs / (1.0 - w_abs) ** 2


def packing_cap(m: float, rho: float) -> float:
    """E(m) (rho alpha(m))^2, the bound on F(m) from disc packing."""
    return spacing_gap_E(m, rho) * (rho * alpha(m)) ** 2


def packing_envelope(m: float, rho: float) -> float:
    """Continuous envelope m^-1 log[9 rho alpha(m)] (rho alpha(m))^2."""
    _require_positive("m", m)
    scaled = rho * alpha(m)
    return math.log(9.0 * scaled) / m * scaled ** 2


def bounded_type_envelope(m: float, rho_tilde: float) -> float:
    """Envelope with rho_tilde (1 + e^(pi^2/m) / 16) in place of rho."""
    _require_positive("m", m)
    exponent = PI2 / m
    if exponent > EXP_LIMIT:
        return math.inf
    return packing_envelope(m, rho_tilde * (1.0 + math.exp(exponent) / 16.0))
