"""Cycle detector: periodic-point search, basin detection and the M_f estimate."""

import logging
import math
from collections import deque
from typing import List, Optional, Sequence, Tuple

import numpy as np

from dynamics.errors import NoCycleFound
from dynamics.maps import deriv, deriv_array, eval_array, eval_map
from schemas.cycles import BasinVerdict, Cycle
from schemas.maps import MapSpec

logger = logging.getLogger(__name__)

MAX_NEWTON_STEPS = 200
REFINE_TOL = 1e-12
DEDUP_TOL = 1e-8
MAX_STEP = 1.0

BASIN_TOL = 1e-9
BASIN_BLOCKS = 50
MULTIPLIER_MARGIN = 1e-6


def _compose(spec: MapSpec, z: np.ndarray, period: int) -> Tuple[np.ndarray, np.ndarray]:
    """f^p(z) and (f^p)'(z) by the chain rule."""
    w = z
    dw = np.ones_like(z)
    with np.errstate(all="ignore"):
        for _ in range(period):
            dw = dw * deriv_array(spec, w)
            w = eval_array(spec, w)
    return w, dw


def newton_periodic(
    spec: MapSpec,
    seeds: np.ndarray,
    period: int,
    max_steps: int = MAX_NEWTON_STEPS,
    tol: float = REFINE_TOL,
) -> Tuple[np.ndarray, np.ndarray]:
    """Damped Newton on f^p(z) - z from every seed at once.

    Steps are capped at length 1. Returns the final iterates and a mask of
    the ones whose residual dropped below ``tol * (1 + |z|)``.
    """
    z = np.asarray(seeds, dtype=np.complex128).copy()
    converged = np.zeros(z.shape, dtype=bool)
    for _ in range(max_steps):
        w, dw = _compose(spec, z, period)
        with np.errstate(all="ignore"):
            residual = w - z
            converged = np.isfinite(residual) & (np.abs(residual) < tol * (1 + np.abs(z)))
            active = np.isfinite(residual) & np.isfinite(dw) & ~converged
            if not active.any():
                break
            step = residual[active] / (dw[active] - 1)
            length = np.abs(step)
            step = np.where(length > MAX_STEP, step / length * MAX_STEP, step)
        z[active] = z[active] - step
    return z, converged


def _has_period(spec: MapSpec, z: complex, q: int, tol: float) -> bool:
    w = z
    for _ in range(q):
        w = eval_map(spec, w)
    return abs(w - z) < tol * (1 + abs(z))


def minimal_period(spec: MapSpec, z: complex, period: int, tol: float = DEDUP_TOL) -> int:
    """Smallest divisor q of ``period`` with f^q(z) = z within tol."""
    for q in range(1, period):
        if period % q == 0 and _has_period(spec, z, q, tol):
            return q
    return period


def _canonical_key(z: complex) -> Tuple[float, float]:
    return (round(z.real, 9), round(z.imag, 9))


def cycle_through(spec: MapSpec, z: complex, period: int) -> Cycle:
    """The cycle of ``z``, started at its lexicographically smallest point."""
    points = [z]
    for _ in range(period - 1):
        points.append(eval_map(spec, points[-1]))
    start = min(range(period), key=lambda k: _canonical_key(points[k]))
    points = points[start:] + points[:start]
    multiplier = complex(1.0)
    for p in points:
        multiplier *= deriv(spec, p)
    return Cycle(
        points=points,
        period=period,
        multiplier=multiplier,
        max_modulus=max(abs(p) for p in points),
    )


def _deduplicate(roots: Sequence[complex], tol: float) -> List[complex]:
    unique: List[complex] = []
    for root in roots:
        if not unique:
            unique.append(root)
            continue
        distances = np.abs(np.asarray(unique) - root)
        if distances.min() >= tol * (1 + abs(root)):
            unique.append(root)
    return unique


def find_cycles(
    spec: MapSpec,
    max_period: int = 4,
    search_box: float = 4.0,
    grid_density: int = 64,
    refine_tol: float = REFINE_TOL,
) -> List[Cycle]:
    """All cycles of period <= max_period reachable by Newton from a seed grid.

    Raises:
        NoCycleFound: If no seed converges
    """
    if max_period < 1:
        raise ValueError(f"max_period must be >= 1, got: {max_period}")

    axis = np.linspace(-search_box, search_box, grid_density)
    seeds = (axis[None, :] + 1j * axis[:, None]).ravel()

    cycles: List[Cycle] = []
    for period in range(1, max_period + 1):
        roots, converged = newton_periodic(spec, seeds, period, tol=refine_tol)
        candidates = [complex(r) for r in roots[converged]]
        unique = _deduplicate(candidates, DEDUP_TOL)
        primitive = [r for r in unique if minimal_period(spec, r, period) == period]

        seen: List[complex] = []
        for root in primitive:
            if seen and np.abs(np.asarray(seen) - root).min() < DEDUP_TOL * (1 + abs(root)):
                continue
            cycle = cycle_through(spec, root, period)
            seen.extend(cycle.points)
            cycles.append(cycle)
        logger.debug(f"Period {period}: {len(primitive)} periodic points from {converged.sum()} seeds")

    if not cycles:
        raise NoCycleFound(
            f"no cycles of period <= {max_period} in |Re z|, |Im z| <= {search_box}"
        )
    cycles.sort(key=lambda c: (c.period, c.max_modulus, _canonical_key(c.points[0])))
    logger.info(f"Found {len(cycles)} cycles of period <= {max_period}")
    return cycles


def estimate_Mf(cycles: Sequence[Cycle]) -> float:
    """min over cycles of max|p| + 1; an upper bound for the true constant."""
    if not cycles:
        raise NoCycleFound("M_f needs at least one cycle")
    return min(cycle.max_modulus + 1.0 for cycle in cycles)


def detect_basin(
    spec: MapSpec,
    z0: complex,
    max_iter: int = 10_000,
    tol: float = BASIN_TOL,
    max_period: int = 4,
    escape_radius: float = 1e100,
) -> BasinVerdict:
    """Look for convergence of the orbit tail to an attracting cycle.

    A period p is detected once |z_k - z_{k-p}| < tol for 50 consecutive
    period-blocks. The cycle is then refined by Newton and accepted only if
    |multiplier| < 1 - 1e-6. Failure to detect never claims absence of a basin.
    """
    history: deque = deque([complex(z0)], maxlen=max_period + 1)
    streak = [0] * (max_period + 1)
    z = complex(z0)
    for step in range(1, max_iter + 1):
        z = eval_map(spec, z)
        if not math.isfinite(abs(z)) or abs(z) > escape_radius:
            return BasinVerdict(in_basin=False, steps=step, reason="orbit escaped")
        history.append(z)
        for p in range(1, max_period + 1):
            if len(history) <= p:
                break
            if abs(z - history[-1 - p]) < tol * max(1.0, abs(z)):
                streak[p] += 1
            else:
                streak[p] = 0
            if streak[p] >= BASIN_BLOCKS * p:
                verdict = _classify(spec, z, p, step)
                if verdict is not None:
                    return verdict
                return BasinVerdict(
                    in_basin=False, steps=step, reason=f"period-{p} limit is not attracting"
                )
    return BasinVerdict(in_basin=False, steps=max_iter, reason="no convergence detected")


def _classify(spec: MapSpec, z: complex, period: int, step: int) -> Optional[BasinVerdict]:
    refined, converged = newton_periodic(spec, np.array([z]), period)
    point = complex(refined[0]) if converged[0] else z
    period = minimal_period(spec, point, period)
    cycle = cycle_through(spec, point, period)
    if abs(cycle.multiplier) < 1 - MULTIPLIER_MARGIN:
        logger.info(
            f"Orbit attracted to period-{period} cycle, |multiplier| = {abs(cycle.multiplier):.6g}"
        )
        return BasinVerdict(in_basin=True, cycle=cycle, steps=step)
    return None
