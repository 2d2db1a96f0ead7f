import itertools
import math

import numpy as np
import pytest

from cocyclelab import BudgetError, Frequency, TorusGrid, TorusPoint, check_diophantine, min_torus_norm, shift, torus_norm
from cocyclelab.cocycle import TrigPoly
from conftest import GOLDEN, brute_force_min_norm


def torus_dist(a, b):
    return max(abs(x - y - round(x - y)) for x, y in zip(a, b))


class TestShift:
    def test_exact_rational(self):
        out = shift((0.25,), Frequency((0.5,)), 3)
        assert out.coords == (0.75,)

    def test_wraparound(self):
        out = shift((0.9, 0.9), Frequency((0.2, 0.3)), 1)
        assert torus_dist(out.coords, (0.1, 0.2)) < 1e-12

    def test_mod1(self):
        out = shift((0.0,), Frequency((0.6180339887,)), 2)
        assert abs(out.coords[0] - 0.2360679774) < 1e-9

    def test_additive_composition(self):
        omega = Frequency((GOLDEN, 0.3432),)
        x = (0.11, 0.77)
        a, b = 7, 12
        lhs = shift(x, omega, a + b)
        rhs = shift(shift(x, omega, a), omega, b)
        assert torus_dist(lhs.coords, rhs.coords) < 1e-12

    def test_rational_period_returns_start(self):
        m = 64
        omega = Frequency((3.0 / m,))
        x = (0.123,)
        out = shift(x, omega, m)
        assert torus_dist(out.coords, x) < 1e-15

    def test_negative_steps_rejected(self):
        with pytest.raises(ValueError):
            shift((0.0,), Frequency((0.5,)), -1)


class TestTorusNorm:
    def test_values(self):
        assert torus_norm(0.3) == pytest.approx(0.3, abs=1e-15)
        assert torus_norm(4.944272) == pytest.approx(0.055728, abs=1e-12)
        assert torus_norm(-0.25) == pytest.approx(0.25, abs=1e-15)

    @pytest.mark.parametrize("t", [0.0, 0.25, 0.5, 0.729, -3.1, 17.077])
    def test_symmetries(self, t):
        assert torus_norm(t) == pytest.approx(torus_norm(-t), abs=1e-12)
        assert torus_norm(t) == pytest.approx(torus_norm(t + 1.0), abs=1e-12)
        assert 0.0 <= torus_norm(t) <= 0.5


class TestMinTorusNorm:
    def test_golden_k10(self, golden):
        val, k = min_torus_norm(golden, 10)
        oval, ok = brute_force_min_norm(golden.vec, 10)
        assert val == pytest.approx(oval, abs=0)
        assert k == ok == (8,)
        assert val == pytest.approx(0.0557281, abs=1e-7)

    def test_rational(self):
        val, k = min_torus_norm(Frequency((0.5,)), 2)
        assert val == 0.0
        assert k == (2,)

    def test_two_dim_matches_bruteforce(self):
        omega = Frequency((0.6180339887, 0.4142135624))
        val, k = min_torus_norm(omega, 3)
        oval, ok = brute_force_min_norm(omega.vec, 3)
        assert val == pytest.approx(oval, abs=0)
        assert k == ok

    def test_antitone_in_K(self, golden):
        vals = [min_torus_norm(golden, k)[0] for k in range(1, 30)]
        assert all(a >= b for a, b in zip(vals, vals[1:]))

    def test_budget(self, golden):
        with pytest.raises(BudgetError):
            min_torus_norm(golden, 10, budget=5)


class TestDiophantine:
    def test_golden_holds(self, golden):
        # Oracle: direct scan of the defining inequality.
        for k in range(1, 51):
            assert torus_norm(k * GOLDEN) > 0.2 / k
        holds, violation = check_diophantine(golden, 50)
        assert holds and violation is None

    def test_rational_fails(self):
        holds, violation = check_diophantine(Frequency((0.5,), tau=0.1, sigma=1.0), 2)
        assert not holds
        assert violation == (2,)

    def test_golden_large_tau_fails(self):
        # Oracle scan: with tau = 0.5 already k = 1 violates the bound,
        # since ||omega|| = 0.382 < 0.5.
        first = next(k for k in range(1, 11) if not torus_norm(k * GOLDEN) > 0.5 / k)
        holds, violation = check_diophantine(Frequency((GOLDEN,), tau=0.5, sigma=1.0), 10)
        assert not holds
        assert violation == (first,) == (1,)


class TestTorusGrid:
    def test_node_count_and_range(self):
        g = TorusGrid(8, 2)
        pts = g.points()
        assert pts.shape == (64, 2)
        assert np.all(pts >= 0.0) and np.all(pts < 1.0)
        # Lexicographic index order.
        assert pts[1][1] > pts[0][1]

    @pytest.mark.parametrize("m,d", [(16, 1), (8, 2)])
    def test_quadrature_exactness(self, m, d):
        # Grid mean of a trig polynomial of degree < M equals its zeroth
        # Fourier coefficient.
        rng = np.random.default_rng(7)
        coeffs = {}
        for k in itertools.product(range(-(m // 2 - 1), m // 2), repeat=d):
            coeffs[k] = complex(rng.standard_normal(), rng.standard_normal())
        poly = TrigPoly(d, 0.1, coeffs)
        vals = poly.evaluate_many(TorusGrid(m, d).points())
        assert abs(np.mean(vals) - coeffs[(0,) * d]) < 1e-12 * max(1.0, abs(coeffs[(0,) * d]))

    def test_point_reduction(self):
        p = TorusPoint((1.25, -0.25))
        assert p.coords == (0.25, 0.75)
