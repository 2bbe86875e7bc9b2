import math

import numpy as np
import pytest

from gaitforge.bezier import (
    BezierCurve,
    PhaseClock,
    bernstein_basis,
    bezier_deriv,
    bezier_eval,
    phase,
    residual,
)


def bernstein_reference(coeffs, tau):
    """Direct Bernstein summation, independent of the module internals."""
    return sum(
        c * math.comb(5, k) * tau**k * (1.0 - tau) ** (5 - k)
        for k, c in enumerate(coeffs)
    )


class TestPhase:
    def test_step_start(self):
        assert phase(PhaseClock(0.0, 0.35), 0.0) == 0.0

    def test_midpoint(self):
        assert phase(PhaseClock(0.0, 0.35), 0.175) == 0.5

    def test_overrun_clamps_to_one(self):
        # raw value would be 0.40/0.35 = 8/7
        assert phase(PhaseClock(0.0, 0.35), 0.40) == 1.0

    def test_nonzero_start(self):
        assert phase(PhaseClock(1.2, 0.4), 1.4) == pytest.approx(0.5)

    def test_time_before_start_rejected(self):
        with pytest.raises(ValueError):
            phase(PhaseClock(1.0, 0.35), 0.5)

    def test_invalid_clock_rejected(self):
        with pytest.raises(ValueError):
            PhaseClock(0.0, 0.0)
        with pytest.raises(ValueError):
            PhaseClock(0.0, -0.1)


class TestBezierEval:
    def test_constant_curve(self):
        curve = BezierCurve((0.7,) * 6)
        for tau in np.linspace(0.0, 1.0, 11):
            assert bezier_eval(curve, tau) == pytest.approx(0.7, abs=1e-15)

    def test_endpoint(self):
        assert bezier_eval(BezierCurve((0, 0, 0, 0, 0, 1)), 1.0) == 1.0

    def test_single_term_midpoint(self):
        # C(5,5) * 0.5^5 = 0.03125
        assert bezier_eval(BezierCurve((0, 0, 0, 0, 0, 1)), 0.5) == pytest.approx(0.03125)

    def test_matches_reference_formula(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            coeffs = rng.uniform(-2.0, 2.0, 6)
            tau = float(rng.uniform(0.0, 1.0))
            assert bezier_eval(coeffs, tau) == pytest.approx(
                bernstein_reference(coeffs, tau), abs=1e-12
            )

    def test_domain_error(self):
        with pytest.raises(ValueError):
            bezier_eval(BezierCurve((0, 0, 0, 0, 0, 1)), 1.01)
        with pytest.raises(ValueError):
            bezier_eval(BezierCurve((0, 0, 0, 0, 0, 1)), -0.01)

    def test_wrong_coefficient_count(self):
        with pytest.raises(ValueError):
            BezierCurve((1.0, 2.0))
        with pytest.raises(ValueError):
            bezier_eval(np.zeros(5), 0.5)


class TestBezierDeriv:
    def test_constant_curve_zero_velocity(self):
        curve = BezierCurve((0.3,) * 6)
        for tau in np.linspace(0.0, 1.0, 11):
            assert bezier_deriv(curve, tau, 0.35) == pytest.approx(0.0, abs=1e-15)

    def test_linear_ladder(self):
        # alpha = [0, 0.2, ..., 1.0] makes B(tau) = tau exactly, so the
        # velocity is 1/t_step everywhere.
        curve = np.array([0.0, 0.2, 0.4, 0.6, 0.8, 1.0])
        for tau in np.linspace(0.0, 1.0, 11):
            assert bezier_deriv(curve, tau, 0.35) == pytest.approx(
                2.857142857142857, abs=1e-12
            )

    def test_start_velocity_from_first_difference(self):
        # derivative curve's first coefficient is 5*(alpha[1]-alpha[0]) = 0
        assert bezier_deriv(np.array([0, 0, 0, 0, 0, 1.0]), 0.0, 1.0) == 0.0

    def test_invalid_t_step(self):
        with pytest.raises(ValueError):
            bezier_deriv(np.zeros(6), 0.5, 0.0)


class TestInvariants:
    def test_endpoint_interpolation_exact(self):
        rng = np.random.default_rng(42)
        for _ in range(1000):
            coeffs = rng.uniform(-3.0, 3.0, 6)
            assert bezier_eval(coeffs, 0.0) == coeffs[0]
            assert bezier_eval(coeffs, 1.0) == coeffs[5]

    def test_coefficients_bound_curve(self):
        rng = np.random.default_rng(43)
        grid = np.linspace(0.0, 1.0, 101)
        for _ in range(1000):
            coeffs = rng.uniform(-3.0, 3.0, 6)
            lo, hi = coeffs.min(), coeffs.max()
            values = np.array([bezier_eval(coeffs, t) for t in grid])
            assert np.all(values >= lo)
            assert np.all(values <= hi)

    def test_derivative_matches_finite_difference(self):
        rng = np.random.default_rng(44)
        h = 1e-5
        grid = np.linspace(0.05, 0.95, 19)
        for _ in range(50):
            coeffs = rng.uniform(-2.0, 2.0, 6)
            for tau in grid:
                fd = (bezier_eval(coeffs, tau + h) - bezier_eval(coeffs, tau - h)) / (2 * h)
                analytic = bezier_deriv(coeffs, tau, 0.35) * 0.35
                assert abs(fd - analytic) < 1e-6

    def test_partition_of_unity(self):
        for tau in np.linspace(0.0, 1.0, 101):
            assert abs(bernstein_basis(tau).sum() - 1.0) < 1e-12


class TestResidual:
    def test_zero_for_perfect_tracking(self):
        q = np.array([0.1, -0.2, 0.3])
        assert np.array_equal(residual(q, q), np.zeros(3))

    def test_subtraction(self):
        assert residual(np.array([0.3]), np.array([0.1]))[0] == pytest.approx(0.2)
        out = residual(np.array([0.0, -0.5]), np.array([0.1, -0.5]))
        assert out == pytest.approx([-0.1, 0.0])

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            residual(np.zeros(3), np.zeros(4))
