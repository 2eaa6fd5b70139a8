"""Bound lab: the derivative-bound inequalities as checkable claims.

Every check returns a :class:`ClaimRecord` whose margin is RHS - LHS in the
direction of the inequality. Checks that depend on the unspecified
constants (C, c1..c6) are marked ``constant_free=False``; the report gives
the smallest constant that would make them hold instead of failing them.
"""

import logging
import math
from enum import Enum
from itertools import combinations
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from bounds.conformal import (
    EXP_LIMIT,
    alpha,
    orbit_bound_D,
    packing_cap,
    spacing_gap_E,
)
from dynamics.errors import DomainError, EmptyIndexSet, LabError, SingularCrossed
from dynamics.telescope import PullbackTracer, annulus_disjoint
from schemas.maps import MapSpec
from schemas.orbit import GeometryConstants, Orbit
from schemas.reports import (
    BoundParams,
    BoundReport,
    ClaimRecord,
    EnvelopePoint,
    FinalBounds,
    IntegralPart,
    IntegralSplit,
    MfProvenance,
)
from schemas.telescope import TailDistribution, TelescopeResult

logger = logging.getLogger(__name__)

GRID_POINTS = 200
GRID_FLOOR = 1e-3
TELESCOPING_TOL = 1e-9
ABEL_TOL = 1e-12


class BoundVariant(str, Enum):
    """Which final lower bound to evaluate."""
    GENERAL = "general"
    BOUNDED_TYPE = "bounded_type"


def _claim(
    claim_id: str,
    margin: float,
    inputs: Optional[Dict] = None,
    vacuous: bool = False,
    constant_free: bool = True,
    provenance: MfProvenance = MfProvenance.UPPER_BOUND,
) -> ClaimRecord:
    return ClaimRecord(
        claim_id=claim_id,
        inputs=inputs or {},
        measured_margin=margin,
        passed=margin >= 0,
        vacuous=vacuous,
        constant_free=constant_free,
        M_f_provenance=provenance,
    )


def check_m_max_cutoff(
    tail: TailDistribution,
    constants: GeometryConstants,
    bounded_type: bool = False,
) -> ClaimRecord:
    """No modulus reaches the cutoff m_max (or m_tilde_max)."""
    cutoff = constants.cutoff(bounded_type)
    return _claim(
        "m_tilde_max_cutoff" if bounded_type else "m_max_cutoff",
        cutoff - tail.max_m,
        {"cutoff": cutoff, "max_m": tail.max_m},
    )


def packing_grid(m_max: float, tail: Optional[TailDistribution] = None) -> List[float]:
    """200 log-spaced points in [1e-3, m_max] plus the jumps of F below m_max."""
    grid = set(np.geomspace(GRID_FLOOR, m_max, GRID_POINTS).tolist())
    if tail is not None:
        grid.update(value for value in tail.sorted_m if value <= m_max)
    return sorted(grid)


def check_packing_bound(
    tail: TailDistribution,
    constants: GeometryConstants,
    grid: Optional[Sequence[float]] = None,
) -> ClaimRecord:
    """F(m) <= E(m) (rho_n alpha(m))^2 on a grid over (0, m_max]."""
    grid = packing_grid(constants.m_max, tail) if grid is None else list(grid)
    worst_m = None
    margin = math.inf
    for m in grid:
        slack = packing_cap(m, constants.rho_n) - tail(m)
        if slack < margin:
            margin, worst_m = slack, m
    return _claim(
        "packing_bound",
        margin,
        {"grid_points": len(grid), "worst_m": worst_m, "rho_n": constants.rho_n},
        vacuous=not tail.sorted_m,
    )


def check_spacing(
    orbit: Orbit,
    tele: TelescopeResult,
    constants: GeometryConstants,
    m: float,
) -> ClaimRecord:
    """|z_{i_j+1} - z_{i_k+1}| >= delta_n / (2 alpha(m)) for positions k - j >= E(m).

    Raises:
        EmptyIndexSet: If no m_i reaches m
    """
    indices = TailDistribution.from_moduli(tele.m).indices_at_least(tele.m, m)
    if not indices:
        raise EmptyIndexSet(f"no m_i >= {m}")
    gap = spacing_gap_E(m, constants.rho_n)
    bound = constants.delta_n / (2.0 * alpha(m))
    margin = math.inf
    pairs = 0
    for (j, first), (k, second) in combinations(enumerate(indices), 2):
        if k - j < gap:
            continue
        pairs += 1
        margin = min(margin, abs(orbit.z[first + 1] - orbit.z[second + 1]) - bound)
    return _claim(
        "spacing",
        margin,
        {"m": m, "E": gap, "indices": len(indices), "pairs": pairs, "bound": bound},
        vacuous=pairs == 0,
    )


def spacing_claims(
    orbit: Orbit,
    tele: TelescopeResult,
    constants: GeometryConstants,
) -> ClaimRecord:
    """The spacing check at half the largest modulus, or a vacuous record."""
    largest = max(tele.m, default=0.0)
    try:
        return check_spacing(orbit, tele, constants, 0.5 * largest if largest > 0 else 1.0)
    except EmptyIndexSet as exc:
        logger.debug(f"Spacing check vacuous: {exc}")
        return _claim("spacing", math.inf, {"reason": str(exc)}, vacuous=True)


def check_inner_disk(
    tracer: PullbackTracer,
    tele: TelescopeResult,
    constants: GeometryConstants,
    i: int,
) -> ClaimRecord:
    """The level-(i+1) region for radius tau_i contains B(z_{i+1}, delta_n / alpha(m_i))."""
    m_i = tele.m[i]
    if m_i <= 0:
        raise DomainError(f"inner-disk check needs m_{i} > 0, got: {m_i}")
    bound = constants.delta_n / alpha(m_i)
    try:
        radius = tracer.inner_radius(tele.log_tau[i], i + 1)
    except SingularCrossed as exc:
        return _claim("inner_disk", -math.inf, {"i": i, "error": str(exc)})
    return _claim("inner_disk", radius - bound, {"i": i, "distance": radius, "bound": bound})


def check_inner_disks(
    tracer: PullbackTracer,
    tele: TelescopeResult,
    constants: GeometryConstants,
) -> ClaimRecord:
    """The inner-disk check for every i with m_i > 0, reduced to the worst case."""
    records = [check_inner_disk(tracer, tele, constants, i) for i in tele.positive_indices()]
    if not records:
        return _claim("inner_disk", math.inf, {"checked": 0}, vacuous=True)
    worst = min(records, key=lambda record: record.measured_margin)
    return _claim(
        "inner_disk",
        worst.measured_margin,
        {"checked": len(records), **worst.inputs},
    )


def check_orbit_bound_Dm(
    orbit: Orbit,
    tele: TelescopeResult,
    constants: GeometryConstants,
) -> ClaimRecord:
    """|z_{i+1}| <= D(m_i) for every i with m_i > 0 (bounded singular set)."""
    if constants.S_f is None:
        raise DomainError("orbit bound D(m) needs a bounded singular set")
    margin = math.inf
    for i in tele.positive_indices():
        margin = min(margin, orbit_bound_D(tele.m[i], constants.M_f, constants.S_f) - abs(orbit.z[i + 1]))
    return _claim(
        "orbit_bound_D",
        margin,
        {"checked": len(tele.positive_indices())},
        vacuous=not tele.positive_indices(),
    )


def base_derivative_bound(
    orbit: Orbit,
    tele: TelescopeResult,
    constants: GeometryConstants,
) -> List[ClaimRecord]:
    """log|(f^n)'(z_0)| against -log rho_n - sum m_i and its sharper forms.

    The sharper form uses the prefactor delta_n / (4 (M_f + |z_0|)); the Koebe
    form uses tau_0 directly in place of the telescoped sum. Since tau_n =
    delta_n, log tau_0 = log delta_n - sum m_i, so the Koebe and sharp margins
    agree up to the telescoping residual: they are one check, not two.
    """
    lhs = orbit.log_derivative(tele.n)
    total = math.fsum(tele.m)
    base = -math.log(constants.rho_n) - total
    prefactor = math.log(4.0 * (constants.M_f + abs(orbit.z[0])))
    sharp = math.log(constants.delta_n) - prefactor - total
    koebe = tele.log_tau[0] - prefactor
    return [
        _claim("base_derivative_bound", lhs - base, {"lhs": lhs, "rhs": base}),
        _claim("base_derivative_bound_sharp", lhs - sharp, {"lhs": lhs, "rhs": sharp}),
        _claim("koebe_consistency", lhs - koebe, {"lhs": lhs, "rhs": koebe}),
    ]


def identity_claims(tele: TelescopeResult, tail: TailDistribution) -> List[ClaimRecord]:
    """Telescoping and summation-by-parts identities as tolerance claims."""
    residual = tele.telescoping_residual
    abel = abs(tail.integral() - tail.total())
    return [
        _claim("telescoping_identity", TELESCOPING_TOL - residual, {"residual": residual}),
        _claim(
            "abel_identity",
            ABEL_TOL * max(1.0, tail.total()) - abel,
            {"residual": abel, "sum_m": tail.total()},
        ),
    ]


def _safe_exp(value: float) -> float:
    return math.exp(value) if value < EXP_LIMIT else math.inf


def integral_split(
    tail: TailDistribution,
    constants: GeometryConstants,
    params: BoundParams,
    n: int,
    bounded_type: bool = False,
) -> IntegralSplit:
    """Four-interval split of the integral of F with the analytic cap of each part."""
    a_n = params.a_n(n)
    cutoff = constants.cutoff(bounded_type)
    intervals = [(cutoff, math.inf), (2.0, cutoff), (a_n, 2.0), (0.0, a_n)]
    empirical = [tail.integral_between(lo, hi) for lo, hi in intervals]

    if bounded_type:
        rho = constants.rho_tilde_n
        log_rho = math.log(rho)
        caps = [
            0.0,
            params.c5 * (rho * log_rho) ** 2,
            rho ** 2 * log_rho * _safe_exp(params.c6 / a_n) / params.c6,
            n * a_n,
        ]
        constant_free = [True, False, False, True]
        minimal_c1 = None
    else:
        rho = constants.rho_n
        log_rho = math.log(rho)
        unit_cap = 2.0 * rho ** 2 * a_n ** -4 * math.log(rho / a_n)
        caps = [0.0, 30.0 * (rho * log_rho) ** 2, params.c1 * unit_cap, n * a_n]
        constant_free = [True, True, False, True]
        minimal_c1 = empirical[2] / unit_cap

    parts = [
        IntegralPart(interval=[lo, hi], empirical=value, cap=cap, constant_free=free)
        for (lo, hi), value, cap, free in zip(intervals, empirical, caps, constant_free)
    ]
    return IntegralSplit(
        a_n=a_n, cutoff=cutoff, parts=parts, total=tail.total(), minimal_c1=minimal_c1
    )


def integral_split_claims(
    split: IntegralSplit,
    provenance: MfProvenance = MfProvenance.UPPER_BOUND,
) -> List[ClaimRecord]:
    """One claim per part: empirical integral <= cap."""
    records = []
    for k, part in enumerate(split.parts, start=1):
        records.append(
            _claim(
                f"integral_part_{k}",
                part.cap - part.empirical,
                {"interval": part.interval, "empirical": part.empirical, "cap": part.cap},
                vacuous=part.empirical == 0,
                constant_free=part.constant_free,
                provenance=provenance,
            )
        )
    return records


def _bound_terms(
    constants: GeometryConstants,
    params: BoundParams,
    n: float,
    variant: BoundVariant,
    z0: Optional[complex],
) -> Tuple[float, float]:
    """(prefactor, growth) with the log bound equal to prefactor - C * growth."""
    if variant == BoundVariant.GENERAL:
        gamma = params.gamma
        growth = gamma ** -2 * constants.rho_n ** (2 + gamma) * n ** ((4 + gamma) / 5)
        return -math.log(constants.rho_n), growth
    if constants.rho_tilde_n is None:
        raise DomainError("bounded-type bound needs S_f")
    if z0 is None:
        raise DomainError("bounded-type bound needs z0")
    if n < 2:
        raise DomainError(f"bounded-type bound needs n >= 2, got: {n}")
    rho = constants.rho_tilde_n
    prefactor = math.log(constants.delta_n / (4.0 * (constants.M_f + abs(z0))))
    return prefactor, (rho * math.log(rho)) ** 2 * n / math.log(n)


def theorem_rhs(
    constants: GeometryConstants,
    params: BoundParams,
    n: float,
    variant: BoundVariant = BoundVariant.GENERAL,
    z0: Optional[complex] = None,
) -> float:
    """Log of the final lower bound for |(f^n)'(z_0)|.

    General: -log rho_n - C gamma^-2 rho_n^(2+gamma) n^((4+gamma)/5).
    Bounded type: log(delta_n / (4 (M_f + |z_0|))) - C (rho~ log rho~)^2 n / log n.
    """
    prefactor, growth = _bound_terms(constants, params, n, variant, z0)
    return prefactor - params.C_abs * growth


def minimal_constant(
    constants: GeometryConstants,
    params: BoundParams,
    n: float,
    target: float,
    variant: BoundVariant = BoundVariant.GENERAL,
    z0: Optional[complex] = None,
) -> float:
    """Smallest C >= 0 with theorem_rhs <= target."""
    prefactor, growth = _bound_terms(constants, params, n, variant, z0)
    return max(0.0, (prefactor - target) / growth)


def rate_exponent(beta: float, gamma: float) -> float:
    """Exponent of n in the envelope when rho_n grows like n^beta."""
    return -0.2 + 2.0 * beta + gamma * (beta + 0.2)


def gamma_threshold(beta: float) -> float:
    """Largest gamma keeping :func:`rate_exponent` negative; needs beta < 1/10."""
    if not 0 <= beta < 0.1:
        raise DomainError(f"beta must lie in [0, 1/10), got: {beta}")
    return (1.0 - 10.0 * beta) / (1.0 + 5.0 * beta)


def analytic_chi_envelope(constants: GeometryConstants, params: BoundParams, n: int) -> float:
    """-(log rho_n)/n minus the summed caps over n, for the configured a_n rule."""
    zero = TailDistribution(n=n, sorted_m=[])
    split = integral_split(zero, constants, params, n)
    return -(math.log(constants.rho_n) + math.fsum(part.cap for part in split.parts)) / n


def chi_lower_envelope(
    runs: Iterable[Tuple[Orbit, GeometryConstants, TelescopeResult]],
    window: Optional[int] = None,
) -> List[EnvelopePoint]:
    """Per-n lower envelope -(log rho_n)/n - (1/n) sum m_i next to chi_n."""
    points = []
    for orbit, constants, tele in runs:
        n = tele.n
        total = math.fsum(tele.m)
        log_rho = math.log(constants.rho_n)
        points.append(
            EnvelopePoint(
                n=n,
                chi_n=orbit.chi(n),
                liminf_proxy=orbit.prefix(n).liminf_proxy(window),
                envelope=-(log_rho + total) / n,
                log_rho_n=log_rho,
                sum_m=total,
                delta_n=constants.delta_n,
                D_n=constants.D_n,
            )
        )
    return sorted(points, key=lambda point: point.n)


def build_report(
    spec: MapSpec,
    orbit: Orbit,
    constants: GeometryConstants,
    tele: TelescopeResult,
    params: BoundParams,
    provenance: MfProvenance = MfProvenance.UPPER_BOUND,
    samples: int = 256,
) -> BoundReport:
    """Run every claim for one telescope and evaluate the final bounds."""
    tail = TailDistribution.from_moduli(tele.m)
    tracer = PullbackTracer(spec, orbit, n=tele.n, samples=samples, bits=tele.precision_bits)
    n = tele.n
    bounded = constants.S_f is not None

    claims = [check_m_max_cutoff(tail, constants)]
    if bounded:
        claims.append(check_m_max_cutoff(tail, constants, bounded_type=True))
    claims.append(check_packing_bound(tail, constants))
    claims.append(spacing_claims(orbit, tele, constants))
    claims.append(check_inner_disks(tracer, tele, constants))
    if bounded:
        claims.append(check_orbit_bound_Dm(orbit, tele, constants))
    claims.extend(base_derivative_bound(orbit, tele, constants))
    claims.extend(identity_claims(tele, tail))
    claims.append(_modulus_claim(tracer, tele))

    split = integral_split(tail, constants, params, n)
    claims.extend(integral_split_claims(split, provenance))
    if bounded and n >= 2:
        bounded_split = integral_split(tail, constants, params, n, bounded_type=True)
        for record in integral_split_claims(bounded_split, provenance):
            claims.append(record.model_copy(update={"claim_id": f"bounded_{record.claim_id}"}))

    claims = [claim.model_copy(update={"M_f_provenance": provenance}) for claim in claims]
    for claim in claims:
        if claim.blocking_failure:
            logger.warning(f"Claim {claim.claim_id} fails with margin {claim.measured_margin:.6g}")

    measured = orbit.log_derivative(n)
    base_rhs = claims_by_id(claims)["base_derivative_bound"].inputs["rhs"]
    koebe_rhs = claims_by_id(claims)["koebe_consistency"].inputs["rhs"]
    z0 = orbit.z[0]
    final = FinalBounds(
        log_measured_derivative=measured,
        base_der_bound_rhs=base_rhs,
        koebe_bound_rhs=koebe_rhs,
        general_rhs=theorem_rhs(constants, params, n),
        bounded_type_rhs=(
            theorem_rhs(constants, params, n, BoundVariant.BOUNDED_TYPE, z0)
            if bounded and n >= 2 else None
        ),
        minimal_C_general=minimal_constant(constants, params, n, base_rhs),
        minimal_C_general_measured=minimal_constant(constants, params, n, measured),
        minimal_C_bounded_type=(
            minimal_constant(constants, params, n, measured, BoundVariant.BOUNDED_TYPE, z0)
            if bounded and n >= 2 else None
        ),
    )
    return BoundReport(
        map=spec.label(),
        z0=[z0.real, z0.imag],
        n=n,
        M_f_provenance=provenance,
        constants={
            "delta_n": constants.delta_n,
            "D_n": constants.D_n,
            "M_f": constants.M_f,
            "S_f": constants.S_f,
            "rho_n": constants.rho_n,
            "rho_tilde_n": constants.rho_tilde_n,
            "m_max": constants.m_max,
            "m_tilde_max": constants.m_tilde_max,
        },
        claims=claims,
        integral_split=split,
        final=final,
    )


def _modulus_claim(tracer: PullbackTracer, tele: TelescopeResult) -> ClaimRecord:
    positive = tele.positive_indices()
    if not positive:
        return _claim("modulus_invariance", math.inf, {"checked": 0}, vacuous=True)
    failures = []
    for i in positive:
        try:
            if not annulus_disjoint(tracer, tele.log_tau[i], tele.log_tau[i + 1], i + 1):
                failures.append(i)
        except LabError as exc:
            logger.debug(f"Annulus trace at i={i} failed: {exc}")
            failures.append(i)
    return _claim(
        "modulus_invariance",
        -float(len(failures)) if failures else 0.0,
        {"checked": len(positive), "failed_indices": failures},
    )


def claims_by_id(claims: Sequence[ClaimRecord]) -> Dict[str, ClaimRecord]:
    return {claim.claim_id: claim for claim in claims}
