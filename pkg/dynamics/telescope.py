"""Telescope: maximal univalent pullback radii by inverse-branch tracing.

A candidate radius t is tested by pulling the circle of radius t around z_n
back along the orbit. The circle is reached from its center through a
radial spoke, so the branch fixing z_{k-1} is selected by continuity from
offset zero. Level k is pulled back in local coordinates:

    x = w / (f(z_{k-1}) - c),   L = log(1 + x) continued along the path,
    u = z_{k-1} * expm1(L / d)  (z^d + c)      u = L  (a*e^z + c)

The singular value sits at x = -1, so a region encloses it exactly when the
traced curve winds around that point.
"""

import logging
import math
from typing import Dict, List, Optional, Tuple

import numpy as np

from dynamics.backends import Backend, backend_for, unit_circle_with_spoke
from dynamics.curves import diameter, distance_to_polyline, polylines_intersect, winding_number
from dynamics.errors import DegenerateOrbit, DomainError, PrecisionExhausted, SingularCrossed
from schemas.maps import MapSpec
from schemas.orbit import GeometryConstants, Orbit
from schemas.telescope import PullbackRegion, TailDistribution, TelescopeResult

logger = logging.getLogger(__name__)

SAMPLES = 256
STEP_TOL = 1e-2
MAX_POINTS = 2 ** 20
BISECT_TOL = 1e-6
CONTAINMENT_FACTOR = 1e-10
MAX_TURN = math.pi / 4


class PullbackTracer:
    """Pulls circles around z_n back along one orbit, level by level.

    The parameter grid only ever gains points, so refinement done for one
    radius is reused by every later trace on the same tracer.
    """

    def __init__(
        self,
        spec: MapSpec,
        orbit: Orbit,
        n: Optional[int] = None,
        samples: int = SAMPLES,
        step_tol: float = STEP_TOL,
        max_points: int = MAX_POINTS,
        containment_tol: Optional[float] = None,
        bits: int = 53,
    ):
        self.spec = spec
        self.n = orbit.n if n is None else n
        if not 1 <= self.n <= orbit.n:
            raise DomainError(f"level n must lie in [1, {orbit.n}], got: {self.n}")
        if samples < 8:
            raise DomainError(f"samples must be >= 8, got: {samples}")
        self.orbit = orbit
        self.samples = samples
        self.step_tol = step_tol
        self.max_points = max_points
        self.backend: Backend = backend_for(bits)

        points = orbit.z[:self.n + 1]
        delta = min(0.5, min(abs(z - spec.c) for z in points))
        self.containment_tol = (
            CONTAINMENT_FACTOR * delta if containment_tol is None else containment_tol
        )

        be = self.backend
        with be.precision():
            self._centers = [be.scalar(z) for z in points]
            # f(z_{k-1}) - c, the image offset of the singular value at level k is its negative
            self._images = [None] + [self._image(center) for center in self._centers[:-1]]
        for k, image in enumerate(self._images[1:], start=1):
            if not image:
                raise DegenerateOrbit(f"z_{k} equals the singular value {spec.c}")

        spoke = np.linspace(0.0, 1.0, max(2, samples // 4), endpoint=False)
        circle = np.linspace(1.0, 2.0, samples + 1)
        self._grid = np.concatenate([spoke, circle])

    def _image(self, center):
        if self.spec.is_poly:
            return center ** self.spec.degree
        return self.backend.scalar(self.spec.a) * self.backend.exp(center)

    @property
    def points(self) -> int:
        return len(self._grid)

    @property
    def _circle(self) -> np.ndarray:
        return self._grid >= 1.0

    def _refine(self, flags: np.ndarray) -> None:
        midpoints = 0.5 * (self._grid[:-1] + self._grid[1:])[flags]
        self._grid = np.sort(np.concatenate([self._grid, midpoints]))
        if len(self._grid) > self.max_points:
            raise PrecisionExhausted(
                f"boundary trace needs more than {self.max_points} points"
            )

    def _check_contains(self, level: int, offsets: np.ndarray) -> None:
        be = self.backend
        image = self._images[level]
        scale = abs(image)
        rel = be.to_complex((offsets[self._circle] + image) / scale)
        if winding_number(rel, 0j) != 0:
            raise SingularCrossed(level)
        if level < self.n and distance_to_polyline(rel, 0j) * scale < self.containment_tol:
            raise SingularCrossed(level, f"singular value within guard band at level {level}")

    def _attempt(
        self, log_radius: float, to_level: int, keep: bool
    ) -> Tuple[Optional[Dict[int, np.ndarray]], Optional[np.ndarray]]:
        be = self.backend
        with be.precision():
            offsets = be.circle(log_radius, unit_circle_with_spoke(self._grid))
            levels = {self.n: offsets} if keep else {}
            for k in range(self.n, to_level, -1):
                self._check_contains(k, offsets)
                x = offsets / self._images[k]
                ratio = be.to_complex(1 + x)
                flags = np.abs(np.angle(ratio[1:] / ratio[:-1])) > MAX_TURN
                if flags.any():
                    return None, flags

                logs = be.unwrap(be.log1p(x))
                if self.spec.is_poly:
                    offsets = self._centers[k - 1] * be.expm1(logs / self.spec.degree)
                else:
                    offsets = logs

                shape = be.normalized(offsets)
                flags = np.abs(np.diff(shape)) > self.step_tol * diameter(shape)
                if flags.any():
                    return None, flags
                if keep:
                    levels[k - 1] = offsets
        return levels, None

    def trace(self, log_radius: float, to_level: int, keep: bool = False) -> Dict[int, np.ndarray]:
        """Offsets of the traced path at each level down to ``to_level``.

        Raises:
            SingularCrossed: If a region pulled back through meets the singular value
            PrecisionExhausted: If refinement exceeds ``max_points``
        """
        if not 0 <= to_level < self.n:
            raise DomainError(f"to_level must lie in [0, {self.n}), got: {to_level}")
        rounds = 0
        while True:
            levels, flags = self._attempt(log_radius, to_level, keep)
            if flags is None:
                if rounds:
                    logger.debug(f"Trace refined {rounds} rounds to {self.points} points")
                return levels
            self._refine(flags)
            rounds += 1

    def passes(self, log_radius: float, to_level: int) -> bool:
        """True when the radius pulls back to ``to_level`` without meeting S."""
        try:
            self.trace(log_radius, to_level)
        except SingularCrossed as exc:
            logger.debug(f"Radius exp({log_radius:.9g}) crosses at level {exc.level}")
            return False
        return True

    def boundary(self, log_radius: float, level: int) -> np.ndarray:
        """Backend offsets of the closed boundary at one level (s = 2 dropped)."""
        if level == self.n:
            with self.backend.precision():
                return self.backend.circle(log_radius, unit_circle_with_spoke(self._grid))[self._circle][:-1]
        offsets = self.trace(log_radius, level, keep=True)[level]
        return offsets[self._circle][:-1]

    def regions(self, log_radius: float, to_level: int) -> List[PullbackRegion]:
        """Traced regions from level n down to ``to_level``."""
        levels = self.trace(log_radius, to_level, keep=True)
        regions = []
        for k in range(self.n, to_level - 1, -1):
            offsets = self.backend.to_complex(levels[k][self._circle][:-1])
            regions.append(
                PullbackRegion(level=k, center=self.orbit.z[k], boundary_offsets=list(offsets))
            )
        return regions

    def inner_radius(self, log_radius: float, level: int) -> float:
        """Distance from z_level to the traced boundary at that level."""
        be = self.backend
        offsets = self.boundary(log_radius, level)
        with be.precision():
            scale = max(abs(v) for v in offsets)
            shape = be.normalized(offsets)
        return distance_to_polyline(shape, 0j) * float(scale)


def trace_pullback(
    spec: MapSpec,
    orbit: Orbit,
    from_level: int,
    to_level: int,
    radius: float,
    samples: int = SAMPLES,
    step_tol: float = STEP_TOL,
    bits: int = 53,
) -> List[PullbackRegion]:
    """Pull the circle of radius t around z_n back to level j.

    Raises:
        SingularCrossed: If the singular value is enclosed by, or within the
            guard band of, a region that must be pulled back further
    """
    if radius <= 0:
        raise DomainError(f"radius must be positive, got: {radius}")
    tracer = PullbackTracer(spec, orbit, n=from_level, samples=samples, step_tol=step_tol, bits=bits)
    return tracer.regions(math.log(radius), to_level)


def _bisect_level(tracer: PullbackTracer, level: int, upper: float, window: float, tol: float) -> float:
    if tracer.passes(upper, level):
        return upper

    hi = upper
    lo = upper - window
    while not tracer.passes(lo, level):
        hi = lo
        lo -= window
        logger.debug(f"Expanding lower probe for level {level} to exp({lo:.6g})")

    gap = math.log1p(tol)
    while hi - lo > gap:
        mid = 0.5 * (lo + hi)
        if tracer.passes(mid, level):
            lo = mid
        else:
            hi = mid
    return lo


def compute_tau(
    spec: MapSpec,
    orbit: Orbit,
    constants: GeometryConstants,
    samples: int = SAMPLES,
    bisect_tol: float = BISECT_TOL,
    step_tol: float = STEP_TOL,
    max_points: int = MAX_POINTS,
    bits: int = 53,
) -> TelescopeResult:
    """Maximal radii tau_i with tau_n = delta_n, found by bisection in log t.

    Each tau_i is warm-started at tau_{i+1}; when that fails the lower probe
    is tau_{i+1} e^{-m_max}, pushed further down by the same factor until it
    passes. The returned tau_i is the passing side of the final bracket.

    Raises:
        PrecisionExhausted: If a probe falls below what the active precision resolves
    """
    n = constants.n
    if n > orbit.n:
        raise DomainError(f"orbit has {orbit.n} steps, constants refer to n={n}")

    tracer = PullbackTracer(
        spec, orbit, n=n, samples=samples, step_tol=step_tol, max_points=max_points, bits=bits
    )
    log_tau = [0.0] * (n + 1)
    log_tau[n] = math.log(constants.delta_n)
    for i in range(n - 1, -1, -1):
        log_tau[i] = _bisect_level(tracer, i, log_tau[i + 1], constants.m_max, bisect_tol)

    moduli = [log_tau[i + 1] - log_tau[i] for i in range(n)]
    tau = [math.exp(value) for value in log_tau]
    tau[n] = constants.delta_n

    koebe_floor = log_tau[0] - math.log(4.0 * (constants.M_f + abs(orbit.z[0])))
    koebe_margin = orbit.log_derivative(n) - koebe_floor
    if koebe_margin < 0:
        logger.warning(f"Koebe consistency fails with margin {koebe_margin:.6g}")

    logger.info(
        f"Telescope finished: n={n}, sum m={math.fsum(moduli):.9g}, "
        f"points={tracer.points}, bits={tracer.backend.bits}"
    )
    return TelescopeResult(
        n=n,
        tau=tau,
        log_tau=log_tau,
        m=moduli,
        precision_bits=tracer.backend.bits,
        samples=samples,
        bisect_tol=bisect_tol,
        koebe_margin=koebe_margin,
    )


def tail_distribution(tele: TelescopeResult) -> TailDistribution:
    """The step function F(m) = #{i : m_i >= m} of a telescope."""
    return TailDistribution.from_moduli(tele.m)


def annulus_disjoint(tracer: PullbackTracer, log_inner: float, log_outer: float, level: int) -> bool:
    """True if the level boundaries for the two radii do not meet."""
    be = tracer.backend
    inner = tracer.boundary(log_inner, level)
    outer = tracer.boundary(log_outer, level)
    with be.precision():
        scale = max(abs(v) for v in outer)
        inner_shape = be.to_complex(inner / scale)
        outer_shape = be.to_complex(outer / scale)
    return not polylines_intersect(inner_shape, outer_shape)


def modulus_invariance(
    spec: MapSpec,
    orbit: Orbit,
    tele: TelescopeResult,
    samples: int = SAMPLES,
) -> Dict[int, bool]:
    """For each i with m_i > 0, whether the traced annulus at level i+1 is embedded."""
    tracer = PullbackTracer(spec, orbit, n=tele.n, samples=samples, bits=tele.precision_bits)
    return {
        i: annulus_disjoint(tracer, tele.log_tau[i], tele.log_tau[i + 1], i + 1)
        for i in tele.positive_indices()
    }
