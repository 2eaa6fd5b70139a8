"""Exception hierarchy for the pullback lab.

Every error carries the process exit code the CLI maps it to:
2 for usage/config problems, 3 when a hypothesis of the bounds fails
(basin membership, degenerate orbit), 4 for numerical failures.
"""

from typing import Any, Optional


class LabError(Exception):
    """Base class for all lab errors."""

    exit_code: int = 1


class DomainError(LabError, ValueError):
    """A closed-form evaluator was called outside its domain."""

    exit_code = 2


class MapSpecError(LabError, ValueError):
    """A map-spec or complex literal could not be parsed."""

    exit_code = 2


class AmbiguousBranch(LabError):
    """Two candidate preimages are equidistant from the tracked point."""

    exit_code = 4


class SingularHit(LabError):
    """A continuation target coincides with the singular value."""

    exit_code = 4


class SingularCrossed(LabError):
    """A traced pullback region encloses or touches the singular value."""

    exit_code = 4

    def __init__(self, level: int, message: Optional[str] = None):
        self.level = level
        super().__init__(message or f"singular value crossed at level {level}")


class DegenerateOrbit(LabError):
    """The orbit meets the singular set, so delta_n would be zero."""

    exit_code = 3


class BasinDetected(LabError):
    """The starting point lies in the basin of an attracting cycle."""

    exit_code = 3

    def __init__(self, cycle: Any):
        self.cycle = cycle
        super().__init__(
            f"orbit is attracted to a cycle of period {cycle.period} "
            f"with |multiplier| = {abs(cycle.multiplier):.6g}"
        )


class NoCycleFound(LabError):
    """Periodic-point search returned nothing; widen the box or the grid."""

    exit_code = 4


class PrecisionExhausted(LabError):
    """The active precision cannot resolve the requested quantity."""

    exit_code = 4


class EmptyIndexSet(LabError):
    """No index i has m_i >= m, so the spacing check is vacuous."""

    exit_code = 0


class ConfigError(LabError, ValueError):
    """A run configuration is malformed or names unknown keys."""

    exit_code = 2
