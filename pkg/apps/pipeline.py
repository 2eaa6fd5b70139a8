"""Run orchestration: wires the dynamics and bounds modules for each subcommand."""

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional, Tuple

from pydantic import BaseModel, Field

from apps.config import RunConfig
from bounds.lab import build_report, chi_lower_envelope
from dynamics.cycles import detect_basin, estimate_Mf, find_cycles
from dynamics.errors import BasinDetected, ConfigError, DomainError
from dynamics.orbits import geometry_constants, iterate, running_geometry, slow_decay_check
from dynamics.telescope import PullbackTracer, compute_tau
from integrations.retry_utils import precision_retry
from schemas.cycles import BasinVerdict, Cycle
from schemas.maps import MapSpec
from schemas.orbit import GeometryConstants, Orbit
from schemas.reports import BoundReport, EnvelopePoint, MfProvenance
from schemas.telescope import PullbackRegion, TelescopeResult

logger = logging.getLogger(__name__)


class TelescopeRun(BaseModel):
    """Everything one telescope computation produced."""
    spec: MapSpec
    orbit: Orbit
    constants: GeometryConstants
    tele: TelescopeResult
    provenance: MfProvenance = MfProvenance.UPPER_BOUND
    cycles: List[Cycle] = Field(default_factory=list)


class BasinRow(BaseModel):
    """One point of a parameter-plane basin sweep."""
    c_re: float
    c_im: float
    in_basin: bool
    period: Optional[int] = None
    abs_multiplier: Optional[float] = None
    steps: int
    reason: str = ""


def search_cycles(spec: MapSpec, config: RunConfig) -> List[Cycle]:
    settings = config.cycles
    return find_cycles(
        spec,
        max_period=settings.max_period,
        search_box=settings.box,
        grid_density=settings.grid,
    )


def cycle_constant(spec: MapSpec, config: RunConfig) -> Tuple[float, MfProvenance, List[Cycle]]:
    """M_f from a finite cycle search; always an upper bound for the true constant."""
    cycles = search_cycles(spec, config)
    M_f = estimate_Mf(cycles)
    logger.warning(
        f"M_f = {M_f:.12g} is an upper bound from cycles of period <= {config.cycles.max_period}"
    )
    return M_f, MfProvenance.UPPER_BOUND, cycles


def check_basin(spec: MapSpec, config: RunConfig) -> BasinVerdict:
    """Raise BasinDetected when z_0 is attracted to a cycle."""
    verdict = detect_basin(
        spec,
        config.orbit.z0,
        max_iter=config.cycles.basin_max_iter,
        max_period=config.cycles.max_period,
        escape_radius=config.orbit.escape_radius,
    )
    if verdict.in_basin:
        raise BasinDetected(verdict.cycle)
    logger.info(f"No attracting cycle detected after {verdict.steps} steps: {verdict.reason}")
    return verdict


def compute_orbit(spec: MapSpec, config: RunConfig, n: Optional[int] = None) -> Orbit:
    """The orbit of z_0; an escaped orbit is truncated at its last finite point."""
    n = config.orbit.n if n is None else n
    orbit = iterate(spec, config.orbit.z0, n, escape_radius=config.orbit.escape_radius)
    if orbit.n < n:
        logger.warning(f"Orbit escaped after {orbit.n} of {n} steps")
    if orbit.n < 1:
        raise DomainError("orbit escaped before the first step")
    logger.info(f"Orbit computed: n={orbit.n}, chi_n={orbit.chi():.12g}")
    return orbit


def run_orbit(config: RunConfig) -> Tuple[MapSpec, Orbit]:
    """The orbit alone; running delta_i may reach 0 without failing."""
    spec = config.orbit.map_spec
    orbit = compute_orbit(spec, config)
    deltas, diameters = running_geometry(spec, orbit)
    if deltas[-1] == 0:
        logger.warning("Orbit meets the singular value; delta_n = 0 and no bound applies")
    logger.info(f"delta_n={deltas[-1]:.12g}, D_n={diameters[-1]:.12g}")
    return spec, orbit


def telescope_for(
    spec: MapSpec,
    orbit: Orbit,
    constants: GeometryConstants,
    config: RunConfig,
) -> TelescopeResult:
    """compute_tau under precision escalation."""
    settings = config.telescope
    escalating = precision_retry(settings.precision_bits, settings.escalation_attempts)(compute_tau)
    return escalating(
        spec,
        orbit,
        constants,
        samples=settings.samples,
        bisect_tol=settings.bisect_tol,
        step_tol=settings.step_tol,
        max_points=settings.max_points,
    )


def run_telescope(config: RunConfig, require_no_basin: bool = False) -> TelescopeRun:
    """Basin check (optional), cycle search, orbit, constants and telescope."""
    spec = config.orbit.map_spec
    if require_no_basin:
        check_basin(spec, config)
    M_f, provenance, cycles = cycle_constant(spec, config)
    orbit = compute_orbit(spec, config)
    constants = geometry_constants(spec, orbit, M_f)
    tele = telescope_for(spec, orbit, constants, config)
    return TelescopeRun(
        spec=spec,
        orbit=orbit,
        constants=constants,
        tele=tele,
        provenance=provenance,
        cycles=cycles,
    )


def telescope_regions(run: TelescopeRun, config: RunConfig) -> List[PullbackRegion]:
    """Regions U_0 .. U_n traced at the smallest radius tau_0."""
    tracer = PullbackTracer(
        run.spec,
        run.orbit,
        n=run.tele.n,
        samples=config.telescope.samples,
        step_tol=config.telescope.step_tol,
        bits=run.tele.precision_bits,
    )
    return tracer.regions(run.tele.log_tau[0], 0)


def run_verify(config: RunConfig) -> BoundReport:
    """The full claim suite; BasinDetected is raised before any telescope work."""
    run = run_telescope(config, require_no_basin=True)
    report = build_report(
        run.spec,
        run.orbit,
        run.constants,
        run.tele,
        config.bounds,
        provenance=run.provenance,
        samples=config.telescope.samples,
    )
    logger.info(f"Report built: {len(report.claims)} claims, passed={report.passed}")
    return report


def _envelope_run(
    config: RunConfig, spec: MapSpec, orbit: Orbit, M_f: float, n: int
) -> Tuple[Orbit, GeometryConstants, TelescopeResult]:
    constants = geometry_constants(spec, orbit, M_f, n)
    tele = telescope_for(spec, orbit, constants, config)
    return orbit, constants, tele


def sweep_envelope(config: RunConfig) -> List[EnvelopePoint]:
    """Envelope and chi_n for each n in n_series, sharing one orbit and M_f.

    Refused with BasinDetected when z_0 is attracted to a cycle.
    """
    series = config.orbit.n_series or []
    if not series:
        raise ConfigError("n_series is empty")
    spec = config.orbit.map_spec
    check_basin(spec, config)
    M_f, _, _ = cycle_constant(spec, config)
    orbit = compute_orbit(spec, config, n=series[-1])
    series = [n for n in series if n <= orbit.n]

    jobs = config.sweep.jobs
    if jobs > 1 and len(series) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(_envelope_run, config, spec, orbit, M_f, n) for n in series
            ]
            runs = [future.result() for future in futures]
    else:
        runs = [_envelope_run(config, spec, orbit, M_f, n) for n in series]

    if config.sweep.kappa is not None and config.sweep.beta is not None:
        decay = slow_decay_check(
            (constants for _, constants, _ in runs), config.sweep.kappa, config.sweep.beta
        )
        if not decay.ok:
            logger.warning(f"Slow-decay rate fails first at n={decay.first_violation}")
    return chi_lower_envelope(runs, window=config.orbit.chi_window)


def _basin_row(config: RunConfig, spec: MapSpec) -> BasinRow:
    verdict = detect_basin(
        spec,
        config.orbit.z0,
        max_iter=config.cycles.basin_max_iter,
        max_period=config.cycles.max_period,
        escape_radius=config.orbit.escape_radius,
    )
    cycle = verdict.cycle
    return BasinRow(
        c_re=spec.c.real,
        c_im=spec.c.imag,
        in_basin=verdict.in_basin,
        period=cycle.period if cycle else None,
        abs_multiplier=abs(cycle.multiplier) if cycle else None,
        steps=verdict.steps,
        reason=verdict.reason,
    )


def sweep_basin(config: RunConfig) -> List[BasinRow]:
    """detect_basin over the c-grid, keeping the family and the other parameters."""
    grid = config.sweep.c_grid()
    if not grid:
        raise ConfigError("parameter grid is empty")
    base = config.orbit.map_spec
    specs = [base.model_copy(update={"c": c}) for c in grid]

    jobs = config.sweep.jobs
    if jobs > 1 and len(specs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_basin_row, [config] * len(specs), specs))
    else:
        rows = [_basin_row(config, spec) for spec in specs]
    logger.info(f"Basin sweep: {sum(row.in_basin for row in rows)} of {len(rows)} in a basin")
    return sorted(rows, key=lambda row: (row.c_re, row.c_im))

