"""Orbit engine: finite orbits, finite-time exponents and geometry constants."""

import logging
import math
from typing import Iterable, List, NamedTuple, Optional, Tuple

from dynamics.errors import DegenerateOrbit, DomainError
from dynamics.maps import deriv, eval_map, singular_set
from schemas.maps import MapSpec
from schemas.orbit import GeometryConstants, Orbit, OrbitStatus

logger = logging.getLogger(__name__)

ESCAPE_RADIUS = 1e100


def _log_abs(value: complex) -> float:
    magnitude = abs(value)
    return math.log(magnitude) if magnitude > 0 else -math.inf


def _running_means(terms: List[float]) -> List[float]:
    """Compensated prefix sums divided by k, with chi_0 = 0.

    Once a term is infinite the mean stays infinite.
    """
    means = [0.0]
    total = 0.0
    compensation = 0.0
    for k, term in enumerate(terms, start=1):
        if not math.isfinite(total) or not math.isfinite(term):
            total = total + term
            compensation = 0.0
        else:
            updated = total + term
            if abs(total) >= abs(term):
                compensation += (total - updated) + term
            else:
                compensation += (term - updated) + total
            total = updated
        means.append((total + compensation) / k)
    return means


def iterate(
    spec: MapSpec,
    z0: complex,
    n: int,
    escape_radius: float = ESCAPE_RADIUS,
) -> Orbit:
    """Compute z_0 .. z_n with log|f'(z_i)| and the prefix exponents.

    Iteration stops early when |z| exceeds ``escape_radius``. Landing exactly
    on the singular value is recorded in the status but does not stop the
    orbit, since both families are entire.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got: {n}")

    singular = spec.c
    points = [complex(z0)]
    logs: List[float] = []
    status = OrbitStatus.COMPLETE
    stopped_at: Optional[int] = None
    if points[0] == singular:
        status, stopped_at = OrbitStatus.HIT_SINGULAR, 0

    for step in range(n):
        current = points[-1]
        image = eval_map(spec, current)
        if not math.isfinite(abs(image)) or abs(image) > escape_radius:
            status, stopped_at = OrbitStatus.OVERFLOWED, step + 1
            logger.info(f"Orbit escaped |z| > {escape_radius:g} at step {step + 1}")
            break
        logs.append(_log_abs(deriv(spec, current)))
        points.append(image)
        if image == singular and status == OrbitStatus.COMPLETE:
            status, stopped_at = OrbitStatus.HIT_SINGULAR, step + 1

    return Orbit(
        z=points,
        log_abs_deriv=logs,
        chi_prefix=_running_means(logs),
        status=status,
        stopped_at=stopped_at,
    )


def running_geometry(spec: MapSpec, orbit: Orbit) -> Tuple[List[float], List[float]]:
    """delta_i and D_i for every prefix z_0 .. z_i of the orbit."""
    singular = singular_set(spec).points
    deltas: List[float] = []
    diameters: List[float] = []
    delta = 0.5
    bound = 0.0
    for z in orbit.z:
        delta = min(delta, min(abs(z - s) for s in singular))
        bound = max(bound, abs(z))
        deltas.append(delta)
        diameters.append(bound + 1.0)
    return deltas, diameters


def geometry_constants(
    spec: MapSpec,
    orbit: Orbit,
    M_f: float,
    n: Optional[int] = None,
) -> GeometryConstants:
    """delta_n, D_n and the derived radii for the first n steps of the orbit.

    Raises:
        DegenerateOrbit: If some z_i with i <= n lies in the singular set
        DomainError: If the orbit is shorter than n or M_f < 1
    """
    n = orbit.n if n is None else n
    if n > orbit.n:
        raise DomainError(f"orbit has {orbit.n} steps, {n} requested")
    if M_f < 1:
        raise DomainError(f"M_f must be >= 1, got: {M_f}")

    sing = singular_set(spec)
    prefix = orbit.z[:n + 1]
    distance = min(abs(z - s) for z in prefix for s in sing.points)
    if distance == 0:
        raise DegenerateOrbit(
            f"orbit meets the singular set {sing.points} within {n} steps; delta_n = 0"
        )
    return GeometryConstants.from_parts(
        n=n,
        delta_n=min(0.5, distance),
        D_n=max(abs(z) for z in prefix) + 1.0,
        M_f=M_f,
        S_f=sing.s_f if sing.bounded else None,
    )


class DecayCheck(NamedTuple):
    """Outcome of the slow-decay rate check."""
    ok: bool
    first_violation: Optional[int]


def slow_decay_check(
    series: Iterable[GeometryConstants],
    kappa: float,
    beta: float,
    bounded: bool = False,
) -> DecayCheck:
    """Check delta_n / D_n >= kappa n^-beta (or delta_n >= kappa n^-beta).

    Returns the first n, in series order, where the rate fails.
    """
    if kappa <= 0:
        raise DomainError(f"kappa must be positive, got: {kappa}")
    if beta >= 0.5:
        raise DomainError(f"beta must be < 1/2, got: {beta}")

    for constants in series:
        n = constants.n
        ratio = constants.delta_n if bounded else constants.delta_n / constants.D_n
        if ratio < kappa * n ** (-beta):
            logger.debug(f"Slow-decay rate fails at n={n}: {ratio:.6g}")
            return DecayCheck(False, n)
    return DecayCheck(True, None)
