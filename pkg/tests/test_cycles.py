"""Tests for the cycle detector."""

import cmath
import math
from unittest.mock import patch

import numpy as np
import pytest

from dynamics.cycles import (
    cycle_through,
    detect_basin,
    estimate_Mf,
    find_cycles,
    minimal_period,
    newton_periodic,
)
from dynamics.errors import NoCycleFound
from dynamics.maps import deriv, eval_map
from schemas.maps import MapSpec


def _contains_point(cycles, value, tol=1e-9):
    return any(abs(p - value) < tol for cycle in cycles for p in cycle.points)


class TestFindCycles:
    """Test periodic-point search."""

    def test_chebyshev_cycles(self):
        """Test fixed points 2, -1 and the period-2 pair of z^2 - 2."""
        cycles = find_cycles(MapSpec.poly(2, -2), max_period=2, search_box=3.0)
        periods = sorted(cycle.period for cycle in cycles)
        assert periods == [1, 1, 2]
        assert _contains_point(cycles, 2)
        assert _contains_point(cycles, -1)
        assert _contains_point(cycles, (-1 + math.sqrt(5)) / 2)
        assert _contains_point(cycles, (-1 - math.sqrt(5)) / 2)

    def test_misiurewicz_fixed_points(self):
        """Test the fixed points (1 +- sqrt(1 - 4i)) / 2 of z^2 + i."""
        cycles = find_cycles(MapSpec.poly(2, 1j), max_period=1)
        root = cmath.sqrt(1 - 4j)
        assert len(cycles) == 2
        assert _contains_point(cycles, (1 + root) / 2)
        assert _contains_point(cycles, (1 - root) / 2)
        assert _contains_point(cycles, complex(1.30024, -0.62481), tol=1e-4)

    def test_square_map(self):
        """Test z^2 has fixed points 0 and 1."""
        cycles = find_cycles(MapSpec.poly(2, 0), max_period=1)
        assert sorted(abs(c.points[0]) for c in cycles) == pytest.approx([0, 1], abs=1e-9)

    def test_cycle_invariants(self):
        """Test each cycle closes up and carries the product of derivatives."""
        spec = MapSpec.poly(2, 1j)
        for cycle in find_cycles(spec, max_period=3):
            points = cycle.points
            for k, p in enumerate(points):
                assert abs(eval_map(spec, p) - points[(k + 1) % len(points)]) < 1e-8
            product = np.prod([deriv(spec, p) for p in points])
            assert abs(cycle.multiplier - product) <= 1e-10 * abs(product)
            assert cycle.max_modulus == max(abs(p) for p in points)

    def test_sorted_by_period_then_modulus(self):
        """Test deterministic ordering."""
        cycles = find_cycles(MapSpec.poly(2, -2), max_period=2)
        keys = [(c.period, c.max_modulus) for c in cycles]
        assert keys == sorted(keys)

    def test_deterministic(self):
        """Test repeated searches agree exactly."""
        spec = MapSpec.poly(2, 0.25 + 0.5j)
        first = [c.to_record() for c in find_cycles(spec, max_period=3)]
        second = [c.to_record() for c in find_cycles(spec, max_period=3)]
        assert first == second

    def test_exponential_has_cycles(self):
        """Test the search works for a*e^z + c."""
        cycles = find_cycles(MapSpec.exp(0.5, 0), max_period=1)
        spec = MapSpec.exp(0.5, 0)
        assert cycles
        for cycle in cycles:
            assert abs(eval_map(spec, cycle.points[0]) - cycle.points[0]) < 1e-8

    def test_no_cycle_found(self):
        """Test an empty search raises NoCycleFound."""
        def nothing_converges(spec, seeds, period, **kwargs):
            return seeds, np.zeros(seeds.shape, dtype=bool)

        with patch("dynamics.cycles.newton_periodic", side_effect=nothing_converges):
            with pytest.raises(NoCycleFound):
                find_cycles(MapSpec.poly(2, 0), max_period=2)

    def test_invalid_period(self):
        """Test max_period >= 1."""
        with pytest.raises(ValueError):
            find_cycles(MapSpec.poly(2, 0), max_period=0)


class TestEstimateMf:
    """Test the cycle constant."""

    def test_chebyshev(self):
        """Test M_f = 2 via the fixed point -1."""
        cycles = find_cycles(MapSpec.poly(2, -2), max_period=2)
        assert estimate_Mf(cycles) == pytest.approx(2.0)

    def test_misiurewicz(self):
        """Test M_f from the small fixed point of z^2 + i."""
        cycles = find_cycles(MapSpec.poly(2, 1j), max_period=2)
        small = abs((1 - cmath.sqrt(1 - 4j)) / 2)
        assert estimate_Mf(cycles) == pytest.approx(small + 1)

    def test_empty(self):
        """Test an empty cycle list."""
        with pytest.raises(NoCycleFound):
            estimate_Mf([])


class TestNewtonHelpers:
    """Test the Newton refinement and period reduction."""

    def test_newton_converges_to_fixed_point(self):
        """Test Newton from a nearby seed."""
        z, converged = newton_periodic(MapSpec.poly(2, -2), np.array([1.9 + 0.1j]), 1)
        assert converged[0]
        assert z[0] == pytest.approx(2)

    def test_minimal_period_reduces(self):
        """Test a fixed point has minimal period 1 among period-2 roots."""
        assert minimal_period(MapSpec.poly(2, -2), 2 + 0j, 2) == 1

    def test_cycle_through_canonical_start(self):
        """Test cycles start at their lexicographically smallest point."""
        spec = MapSpec.poly(2, -2)
        big = (-1 + math.sqrt(5)) / 2
        cycle = cycle_through(spec, complex(big), 2)
        assert cycle.points[0].real < cycle.points[1].real


class TestDetectBasin:
    """Test basin detection."""

    def test_attracting_fixed_point(self):
        """Test z^2 - 0.5 from 0 is attracted to (1 - sqrt 3) / 2."""
        verdict = detect_basin(MapSpec.poly(2, -0.5), 0)
        assert verdict.in_basin
        assert verdict.cycle.period == 1
        assert abs(verdict.cycle.points[0] - (1 - math.sqrt(3)) / 2) < 1e-8
        assert abs(verdict.cycle.multiplier - (1 - math.sqrt(3))) < 1e-8

    def test_superattracting(self):
        """Test z^2 from 0.5 is attracted to 0."""
        verdict = detect_basin(MapSpec.poly(2, 0), 0.5)
        assert verdict.in_basin
        assert abs(verdict.cycle.points[0]) < 1e-8
        assert abs(verdict.cycle.multiplier) < 1e-8

    def test_attracting_two_cycle(self):
        """Test z^2 - 1 from 0.1 is attracted to the cycle {0, -1}."""
        verdict = detect_basin(MapSpec.poly(2, -1), 0.1)
        assert verdict.in_basin
        assert verdict.cycle.period == 2
        assert _contains_point([verdict.cycle], -1, tol=1e-8)

    def test_chaotic_orbit(self):
        """Test z^2 - 2 from 0.3 is not detected."""
        verdict = detect_basin(MapSpec.poly(2, -2), 0.3, max_iter=5000)
        assert not verdict.in_basin
        assert verdict.cycle is None
        assert verdict.reason

    def test_repelling_fixed_point_not_attracting(self):
        """Test an orbit sitting on a repelling fixed point is rejected."""
        verdict = detect_basin(MapSpec.poly(2, -2), 2)
        assert not verdict.in_basin
        assert "not attracting" in verdict.reason

    def test_escape(self):
        """Test an escaping orbit."""
        verdict = detect_basin(MapSpec.poly(2, 0), 2)
        assert not verdict.in_basin
        assert verdict.reason == "orbit escaped"
