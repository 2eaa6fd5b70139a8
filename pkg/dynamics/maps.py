"""Map model: evaluation, derivatives, singular sets and inverse branches."""

import cmath
import logging
import math
from typing import List, Sequence

import numpy as np

from dynamics.errors import AmbiguousBranch, SingularHit
from schemas.maps import InverseBranchState, MapSpec, SingularSet

logger = logging.getLogger(__name__)

# Distinguished non-finite result for overflow.
OVERFLOW = complex(math.inf, math.inf)

BRANCH_TOL = 1e-12


def _finite_or_overflow(value: complex) -> complex:
    return value if cmath.isfinite(value) else OVERFLOW


def eval_map(spec: MapSpec, z: complex) -> complex:
    """f(z) = z^d + c or a*e^z + c; overflow returns :data:`OVERFLOW`."""
    try:
        if spec.is_poly:
            value = z ** spec.degree + spec.c
        else:
            value = spec.a * cmath.exp(z) + spec.c
    except OverflowError:
        return OVERFLOW
    return _finite_or_overflow(value)


def deriv(spec: MapSpec, z: complex) -> complex:
    """f'(z) = d*z^(d-1) or a*e^z; overflow returns :data:`OVERFLOW`."""
    try:
        if spec.is_poly:
            value = spec.degree * z ** (spec.degree - 1)
        else:
            value = spec.a * cmath.exp(z)
    except OverflowError:
        return OVERFLOW
    return _finite_or_overflow(value)


def eval_array(spec: MapSpec, z: np.ndarray) -> np.ndarray:
    """Vectorized f; non-finite entries are left in place for the caller to mask."""
    with np.errstate(all="ignore"):
        if spec.is_poly:
            return z ** spec.degree + spec.c
        return spec.a * np.exp(z) + spec.c


def deriv_array(spec: MapSpec, z: np.ndarray) -> np.ndarray:
    """Vectorized f'."""
    with np.errstate(all="ignore"):
        if spec.is_poly:
            return spec.degree * z ** (spec.degree - 1)
        return spec.a * np.exp(z)


def singular_set(spec: MapSpec) -> SingularSet:
    """The singular values of f^-1.

    Both families have exactly one: the critical value c of z^d + c, or the
    omitted asymptotic value c of a*e^z + c.
    """
    return SingularSet(points=[spec.c], bounded=True, s_f=abs(spec.c) + 1.0)


def preimage_candidates(spec: MapSpec, target: complex, near: complex) -> List[complex]:
    """Preimages of target closest to ``near``, nearest first.

    For polynomials all d roots are returned; for the exponential the two
    logarithm branches bracketing ``near`` are returned.
    """
    w = target - spec.c
    if spec.is_poly:
        d = spec.degree
        radius = abs(w) ** (1.0 / d)
        angle = cmath.phase(w)
        candidates = [
            cmath.rect(radius, (angle + 2 * math.pi * k) / d) for k in range(d)
        ]
    else:
        principal = cmath.log(w / spec.a)
        turns = (near.imag - principal.imag) / (2 * math.pi)
        low = math.floor(turns)
        candidates = [principal + 2j * math.pi * k for k in (low, low + 1)]
    return sorted(candidates, key=lambda p: abs(p - near))


def pull_back_step(
    spec: MapSpec,
    branch: InverseBranchState,
    target: complex,
    tol: float = BRANCH_TOL,
) -> InverseBranchState:
    """Continue an inverse branch of f to a nearby target.

    Raises:
        SingularHit: If target is the singular value within tol
        AmbiguousBranch: If the two nearest preimages are equidistant within tol
    """
    scale = max(1.0, abs(spec.c))
    if abs(target - spec.c) <= tol * scale:
        raise SingularHit(f"target {target} coincides with singular value {spec.c}")

    candidates = preimage_candidates(spec, target, branch.current_point)
    if len(candidates) > 1:
        first = abs(candidates[0] - branch.current_point)
        second = abs(candidates[1] - branch.current_point)
        if second - first <= tol * max(1.0, second):
            raise AmbiguousBranch(
                f"preimages {candidates[0]} and {candidates[1]} are equidistant "
                f"from {branch.current_point}; refine the path step"
            )
    return InverseBranchState(current_point=candidates[0], level=branch.level + 1)


def continue_along(
    spec: MapSpec,
    start: InverseBranchState,
    targets: Sequence[complex],
) -> List[complex]:
    """Pull back a path point by point; returns the preimage of each target."""
    branch = start
    preimages = []
    for target in targets:
        branch = pull_back_step(spec, branch, target)
        preimages.append(branch.current_point)
    return preimages
