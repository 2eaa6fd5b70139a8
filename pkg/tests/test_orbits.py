"""Tests for the orbit engine."""

import math

import pytest

from dynamics.errors import DegenerateOrbit, DomainError
from dynamics.orbits import geometry_constants, iterate, running_geometry, slow_decay_check
from schemas.maps import MapSpec
from schemas.orbit import GeometryConstants, OrbitStatus


class TestIterate:
    """Test orbit computation and finite-time exponents."""

    def test_repelling_fixed_point(self):
        """Test chi_n = log 4 at the fixed point 2 of z^2 - 2."""
        orbit = iterate(MapSpec.poly(2, -2), 2, 30)
        assert orbit.n == 30
        assert orbit.status == OrbitStatus.COMPLETE
        for k in range(1, 31):
            assert abs(orbit.chi(k) - math.log(4)) < 1e-12

    def test_misiurewicz_two_cycle(self):
        """Test chi_n at even n is half the log-modulus of the multiplier 4(1+i)."""
        orbit = iterate(MapSpec.poly(2, 1j), -1j, 10_000)
        assert orbit.z[1] == -1 + 1j
        assert orbit.z[2] == -1j
        expected = 0.5 * math.log(4 * math.sqrt(2))
        assert abs(orbit.chi(10_000) - expected) < 1e-6

    def test_attracted_orbit_converges(self):
        """Test the tail average tends to log|multiplier| of the attracting fixed point."""
        orbit = iterate(MapSpec.poly(2, -0.5), 0.1, 10_000)
        multiplier = 1 - math.sqrt(3)
        tail = orbit.log_abs_deriv[5000:]
        assert abs(math.fsum(tail) / len(tail) - math.log(abs(multiplier))) < 1e-6
        assert orbit.chi() == pytest.approx(math.log(abs(multiplier)), abs=1e-3)

    def test_critical_point_gives_minus_infinity(self):
        """Test log|f'(0)| = -inf propagates into chi."""
        orbit = iterate(MapSpec.poly(2, -0.5), 0, 5)
        assert orbit.log_abs_deriv[0] == -math.inf
        assert orbit.chi() == -math.inf

    def test_chi_prefix_starts_at_zero(self):
        """Test chi_0 = 0 and lengths line up."""
        orbit = iterate(MapSpec.poly(2, 1j), 0.1, 7)
        assert orbit.chi_prefix[0] == 0
        assert len(orbit.z) == 8
        assert len(orbit.log_abs_deriv) == 7

    def test_escape_stops_iteration(self):
        """Test an escaping orbit stops before the escaped point."""
        orbit = iterate(MapSpec.poly(2, 0), 3, 50, escape_radius=1e6)
        assert orbit.status == OrbitStatus.OVERFLOWED
        assert orbit.n == 3
        assert orbit.stopped_at == 4
        assert all(abs(z) <= 1e6 for z in orbit.z)
        assert not orbit.is_complete

    def test_exponential_overflow(self):
        """Test the exponential escapes without raising."""
        orbit = iterate(MapSpec.exp(1, 0), 1, 10)
        assert orbit.status == OrbitStatus.OVERFLOWED
        assert orbit.n < 10

    def test_hits_singular_value(self):
        """Test landing on c is recorded without stopping."""
        orbit = iterate(MapSpec.poly(2, -2), 0, 4)
        assert orbit.status == OrbitStatus.HIT_SINGULAR
        assert orbit.stopped_at == 1
        assert orbit.n == 4

    def test_invalid_n(self):
        """Test n < 1 is rejected."""
        with pytest.raises(DomainError):
            iterate(MapSpec.poly(2, 0), 0.5, 0)

    def test_liminf_proxy(self):
        """Test the trailing-window minimum."""
        orbit = iterate(MapSpec.poly(2, 1j), -1j, 100)
        window = orbit.chi_prefix[91:101]
        assert orbit.liminf_proxy() == min(window)
        assert orbit.liminf_proxy(window=1) == orbit.chi(100)

    def test_prefix(self):
        """Test prefixes keep the computed values."""
        orbit = iterate(MapSpec.poly(2, 1j), -1j, 20)
        prefix = orbit.prefix(5)
        assert prefix.n == 5
        assert prefix.chi() == orbit.chi(5)
        assert prefix.log_derivative() == pytest.approx(math.fsum(orbit.log_abs_deriv[:5]))


class TestGeometryConstants:
    """Test delta_n, D_n and the derived radii."""

    def test_chebyshev_fixed_point(self):
        """Test z^2 - 2 at z0 = 2 with M_f = 2."""
        spec = MapSpec.poly(2, -2)
        constants = geometry_constants(spec, iterate(spec, 2, 10), 2.0)
        assert constants.delta_n == 0.5
        assert constants.D_n == 3
        assert constants.rho_n == 40
        assert constants.m_max == pytest.approx(5.68888, abs=1e-5)
        assert constants.S_f == 3
        assert constants.rho_tilde_n == 40

    def test_misiurewicz_orbit(self):
        """Test z^2 + i at z0 = -i."""
        spec = MapSpec.poly(2, 1j)
        constants = geometry_constants(spec, iterate(spec, -1j, 8), 2.0)
        assert constants.delta_n == 0.5
        assert constants.D_n == pytest.approx(1 + math.sqrt(2))

    def test_small_delta(self):
        """Test delta_n below 1/2 near the singular value."""
        spec = MapSpec.poly(2, -2)
        orbit = iterate(spec, 0.3, 12)
        constants = geometry_constants(spec, orbit, 2.0)
        expected = min(0.5, min(abs(z + 2) for z in orbit.z))
        assert constants.delta_n == pytest.approx(expected)
        assert constants.rho_n >= 16

    def test_degenerate_orbit(self):
        """Test an orbit through the singular value."""
        spec = MapSpec.poly(2, -2)
        with pytest.raises(DegenerateOrbit):
            geometry_constants(spec, iterate(spec, 0, 5), 2.0)

    def test_n_beyond_orbit(self):
        """Test n larger than the orbit."""
        spec = MapSpec.poly(2, -2)
        with pytest.raises(DomainError):
            geometry_constants(spec, iterate(spec, 2, 5), 2.0, n=6)

    def test_running_geometry_is_monotone(self):
        """Test delta_i non-increasing and D_i non-decreasing."""
        spec = MapSpec.poly(2, -2)
        deltas, diameters = running_geometry(spec, iterate(spec, 0.3, 40))
        assert all(b <= a for a, b in zip(deltas, deltas[1:]))
        assert all(b >= a for a, b in zip(diameters, diameters[1:]))

    def test_prefix_constants_match_running_series(self):
        """Test geometry_constants at each n agrees with the running series."""
        spec = MapSpec.poly(2, -2)
        orbit = iterate(spec, 0.3, 15)
        deltas, diameters = running_geometry(spec, orbit)
        for n in (1, 5, 15):
            constants = geometry_constants(spec, orbit, 2.0, n=n)
            assert constants.delta_n == deltas[n]
            assert constants.D_n == diameters[n]

    def test_rejects_small_cycle_constant(self):
        """Test the schema rejects M_f < 1."""
        with pytest.raises(ValueError):
            GeometryConstants.from_parts(n=1, delta_n=0.5, D_n=1.0, M_f=0.5)


class TestSlowDecayCheck:
    """Test the slow-decay rate check."""

    @staticmethod
    def _series(deltas, D=1.0):
        return [
            GeometryConstants.from_parts(n=n, delta_n=delta, D_n=D, M_f=1.0)
            for n, delta in deltas
        ]

    def test_constant_ratio_passes(self):
        """Test delta = 0.5, D = 3 against 0.1 n^-0.4."""
        series = self._series([(n, 0.5) for n in range(1, 200)], D=3.0)
        assert slow_decay_check(series, 0.1, 0.4).ok

    def test_fast_decay_fails(self):
        """Test delta = 1/n fails early."""
        series = self._series([(n, 1.0 / n) for n in range(2, 50)])
        check = slow_decay_check(series, 1.0, 0.4, bounded=True)
        assert not check.ok
        assert check.first_violation == 2

    def test_boundary_case(self):
        """Test equality everywhere passes."""
        series = self._series([(n, 0.3 * n ** (-0.3)) for n in range(1, 100)])
        assert slow_decay_check(series, 0.3, 0.3, bounded=True).ok

    def test_preconditions(self):
        """Test kappa > 0 and beta < 1/2."""
        with pytest.raises(DomainError):
            slow_decay_check([], 0.0, 0.1)
        with pytest.raises(DomainError):
            slow_decay_check([], 1.0, 0.5)
