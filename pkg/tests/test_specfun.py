"""Special-function tests: frozen quadrature oracle values, closed-form
special cases and structural properties."""

import math

import numpy as np
import pytest

from ehrelay import (DEFAULT_TOL, NumericalError, Tolerance, ValidationError,
                     lower_incomplete_gamma, marcum_q)

# oracle values computed by adaptive quadrature before the implementation
# existed (independent integrands, scipy.integrate.quad at 1e-13 tolerances)
MARCUM_2_1_2 = 0.5301469080839656          # integral of the order-2 tail density over [2, inf)
LOWER_GAMMA_3_2P5 = 0.9123737682333409     # integral of exp(-t) t^2 over [0, 2.5]


class TestMarcumQ:
    def test_full_support_is_one(self):
        assert marcum_q(3, 2.0, 0.0) == 1.0

    def test_zero_noncentrality_is_rayleigh_tail(self):
        assert marcum_q(1, 0.0, 1.0) == pytest.approx(math.exp(-0.5), abs=1e-13)

    def test_frozen_quadrature_value(self):
        assert marcum_q(2, 1.0, 2.0) == pytest.approx(MARCUM_2_1_2, abs=1e-8)

    def test_bounds_and_monotonicity_in_b(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            order = int(rng.integers(1, 5))
            a = float(rng.uniform(0.0, 10.0))
            bs = np.sort(rng.uniform(0.0, 10.0, size=4))
            values = [marcum_q(order, a, float(b)) for b in bs]
            assert all(0.0 <= v <= 1.0 for v in values)
            assert all(x >= y - 1e-12 for x, y in zip(values, values[1:]))

    def test_large_arguments_do_not_overflow(self):
        # Bessel-series forms blow up near a*b ~ 700; the tail form must not
        v = marcum_q(2, 40.0, 38.0)
        assert 0.0 <= v <= 1.0
        assert v == pytest.approx(0.9792487373, abs=1e-6)
        assert 0.0 <= marcum_q(1, 60.0, 80.0) <= 1.0

    def test_domain_errors(self):
        with pytest.raises(ValidationError):
            marcum_q(0, 1.0, 1.0)
        with pytest.raises(ValidationError):
            marcum_q(1, -0.1, 1.0)
        with pytest.raises(ValidationError):
            marcum_q(1, 1.0, -2.0)
        with pytest.raises(ValidationError):
            marcum_q(1, float("nan"), 1.0)

    def test_nonconvergence_raises_instead_of_nan(self):
        with pytest.raises(NumericalError):
            marcum_q(1, 9.0, 5.0, Tolerance(abs_tol=1e-12, max_terms=3))


class TestLowerIncompleteGamma:
    def test_empty_interval(self):
        assert lower_incomplete_gamma(2.0, 0.0) == 0.0

    def test_alpha_one_closed_form(self):
        assert lower_incomplete_gamma(1.0, 1.0) == pytest.approx(-math.expm1(-1.0), abs=1e-13)

    def test_frozen_quadrature_value(self):
        assert lower_incomplete_gamma(3.0, 2.5) == pytest.approx(LOWER_GAMMA_3_2P5, abs=1e-10)

    def test_regularized_range_and_monotonicity(self):
        rng = np.random.default_rng(23)
        for _ in range(100):
            alpha = float(rng.uniform(0.5, 10.0))
            xs = np.sort(rng.uniform(0.0, 50.0, size=4))
            reg = [lower_incomplete_gamma(alpha, float(x)) / math.gamma(alpha) for x in xs]
            assert all(0.0 <= r <= 1.0 for r in reg)
            assert all(b >= a - 1e-12 for a, b in zip(reg, reg[1:]))

    def test_saturates_at_gamma(self):
        for alpha in (0.5, 1.7, 6.0):
            assert lower_incomplete_gamma(alpha, 400.0) == pytest.approx(
                math.gamma(alpha), rel=1e-12)

    def test_recurrence(self):
        # integral identity: value(alpha+1, x) = alpha*value(alpha, x) - x^alpha exp(-x)
        rng = np.random.default_rng(37)
        for _ in range(200):
            alpha = float(rng.uniform(0.5, 8.0))
            x = float(rng.uniform(0.0, 30.0))
            lhs = lower_incomplete_gamma(alpha + 1.0, x)
            rhs = alpha * lower_incomplete_gamma(alpha, x) - x**alpha * math.exp(-x)
            assert lhs == pytest.approx(rhs, abs=1e-9)

    def test_domain_errors(self):
        with pytest.raises(ValidationError):
            lower_incomplete_gamma(0.0, 1.0)
        with pytest.raises(ValidationError):
            lower_incomplete_gamma(2.0, -1.0)


class TestTolerance:
    def test_defaults(self):
        assert DEFAULT_TOL.abs_tol == 1e-12
        assert DEFAULT_TOL.max_terms == 10000

    def test_validation(self):
        with pytest.raises(ValidationError):
            Tolerance(abs_tol=0.0)
        with pytest.raises(ValidationError):
            Tolerance(max_terms=0)
