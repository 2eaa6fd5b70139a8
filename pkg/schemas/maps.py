"""Map family schemas and the map-spec grammar.

Grammar accepted by :func:`parse_map_spec`::

    poly:d=<int>,c=<re>[+<im>i]
    exp:a=<re>[+<im>i],c=<re>[+<im>i]
"""

import re
from enum import Enum
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from dynamics.errors import MapSpecError

_REAL = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")


class MapFamily(str, Enum):
    """Implemented holomorphic families."""
    UNICRITICAL_POLY = "poly"
    EXPONENTIAL = "exp"


class DomainKind(str, Enum):
    """Domain of definition; both families are entire."""
    ENTIRE_PLANE = "entire_plane"


class MapSpec(BaseModel):
    """A member of one of the implemented families."""
    model_config = ConfigDict(frozen=True)

    family: MapFamily = Field(..., description="Map family")
    degree: Optional[int] = Field(default=None, description="Degree d of z^d + c")
    a: complex = Field(default=1 + 0j, description="Multiplier a of a*e^z + c")
    c: complex = Field(default=0j, description="Additive parameter c")
    domain_kind: DomainKind = Field(default=DomainKind.ENTIRE_PLANE)

    @model_validator(mode="after")
    def validate_family_parameters(self) -> "MapSpec":
        """Validate the per-family invariants."""
        if self.family == MapFamily.UNICRITICAL_POLY:
            if self.degree is None or self.degree < 2:
                raise ValueError(f"unicritical degree must be an integer >= 2, got: {self.degree}")
        elif abs(self.a) == 0:
            raise ValueError("exponential multiplier a must be non-zero")
        return self

    @classmethod
    def poly(cls, degree: int, c: complex) -> "MapSpec":
        """Build z^d + c."""
        return cls(family=MapFamily.UNICRITICAL_POLY, degree=degree, c=complex(c))

    @classmethod
    def exp(cls, a: complex, c: complex) -> "MapSpec":
        """Build a*e^z + c."""
        return cls(family=MapFamily.EXPONENTIAL, a=complex(a), c=complex(c))

    @property
    def is_poly(self) -> bool:
        return self.family == MapFamily.UNICRITICAL_POLY

    def label(self) -> str:
        """Canonical grammar string for this map."""
        if self.is_poly:
            return f"poly:d={self.degree},c={format_complex(self.c)}"
        return f"exp:a={format_complex(self.a)},c={format_complex(self.c)}"


class SingularSet(BaseModel):
    """Singular values of the inverse, sing(f^-1)."""
    points: List[complex] = Field(..., description="Critical and asymptotic values")
    bounded: bool = Field(default=True, description="Whether the set is bounded")
    s_f: Optional[float] = Field(default=None, description="sup|s| + 1 when bounded")

    @model_validator(mode="after")
    def validate_s_f(self) -> "SingularSet":
        """Validate S_f against the point list."""
        if not self.points:
            raise ValueError("singular set must contain at least one point")
        if self.bounded:
            expected = max(abs(s) for s in self.points) + 1.0
            if self.s_f is None or abs(self.s_f - expected) > 1e-12 * expected:
                raise ValueError(f"S_f must equal max|s| + 1 = {expected}, got: {self.s_f}")
        return self


class InverseBranchState(BaseModel):
    """A point tracked along a continued inverse branch."""
    model_config = ConfigDict(frozen=True)

    current_point: complex
    level: int = 0


def _parse_real(text: str, source: str) -> float:
    if not _REAL.fullmatch(text):
        raise MapSpecError(f"invalid number {text!r} in {source!r}")
    return float(text)


def parse_complex(text: str) -> complex:
    """Parse ``2``, ``-0.5``, ``-1+i``, ``0.3-2.5i``, ``i`` or ``1e-3i``."""
    s = text.strip().replace(" ", "")
    if not s:
        raise MapSpecError("empty complex literal")
    if s[-1] not in "ij":
        return complex(_parse_real(s, text), 0.0)

    body = s[:-1]
    split = None
    for idx in range(len(body) - 1, 0, -1):
        if body[idx] in "+-" and body[idx - 1] not in "eE":
            split = idx
            break
    if split is None:
        real_text, imag_text = "0", body
    else:
        real_text, imag_text = body[:split], body[split:]
    if imag_text in ("", "+"):
        imag_text = "1"
    elif imag_text == "-":
        imag_text = "-1"
    return complex(_parse_real(real_text, text), _parse_real(imag_text, text))


def _format_real(value: float) -> str:
    text = repr(float(value))
    return text[:-2] if text.endswith(".0") else text


def format_complex(value: complex) -> str:
    """Inverse of :func:`parse_complex` for finite values."""
    if value.imag == 0:
        return _format_real(value.real)
    sign = "-" if value.imag < 0 else "+"
    return f"{_format_real(value.real)}{sign}{_format_real(abs(value.imag))}i"


def _split_params(body: str, source: str) -> Dict[str, str]:
    params: Dict[str, str] = {}
    for item in body.split(","):
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep or not key or not value.strip():
            raise MapSpecError(f"expected key=value, got {item!r} in {source!r}")
        if key in params:
            raise MapSpecError(f"duplicate key {key!r} in {source!r}")
        params[key] = value.strip()
    return params


def parse_map_spec(text: str) -> MapSpec:
    """Parse the map-spec grammar into a :class:`MapSpec`.

    Raises:
        MapSpecError: If the family, keys or literals are malformed
    """
    family, sep, body = text.strip().partition(":")
    if not sep:
        raise MapSpecError(f"map spec must look like 'poly:d=2,c=-2', got: {text!r}")
    params = _split_params(body, text)

    try:
        if family == MapFamily.UNICRITICAL_POLY.value:
            unknown = set(params) - {"d", "c"}
            if unknown or "d" not in params:
                raise MapSpecError(f"poly expects keys d and c, got: {sorted(params)}")
            if not re.fullmatch(r"\d+", params["d"]):
                raise MapSpecError(f"degree must be an integer, got: {params['d']!r}")
            return MapSpec.poly(int(params["d"]), parse_complex(params.get("c", "0")))
        if family == MapFamily.EXPONENTIAL.value:
            unknown = set(params) - {"a", "c"}
            if unknown:
                raise MapSpecError(f"exp expects keys a and c, got: {sorted(params)}")
            return MapSpec.exp(
                parse_complex(params.get("a", "1")), parse_complex(params.get("c", "0"))
            )
    except ValueError as e:
        if isinstance(e, MapSpecError):
            raise
        raise MapSpecError(f"invalid map parameters in {text!r}: {e}")
    raise MapSpecError(f"unknown map family {family!r}; expected 'poly' or 'exp'")
