"""
Test cases for the mass curve.

Tests cover:
- M(omega) against direct quadrature of the closed-form profile
- M'(omega) integral formula against finite differences
- M'(0): zero on 2p + q = 7, the -infinity marker for p >= 7/3, sign grid
- the pairing integral 2 int phi_0 eta_0 and its identity with M'(0)
- extrapolation of the pairing integral in the cut
- profile norms, Nehari / first-integral identities, scaling second derivative
"""
import math

import numpy as np
from django.test import SimpleTestCase, tag
from scipy import integrate

from waves import model
from waves.exceptions import NumericalFailure, PreconditionError
from waves.mass import (
    MINUS_INFINITY, MassMethod, MassReport, divergence_witness, is_minus_infinity, mass, mass_prime, mass_prime_fd,
    mass_report, pairing_integral, pohozaev_defects, profile_norms, scaling_second_derivative, sign_of,
)
from waves.model import ModelParams, StabilityTag
from waves.profile import get_evaluator, phi_closed_form
from waves.quadrature import richardson_limit


def closed_form_mass(omega, params):
    value, _ = integrate.quad(lambda x: float(phi_closed_form(x, omega, params)) ** 2, 0.0, np.inf,
                              epsabs=1e-13, epsrel=1e-13, limit=500)
    return value


class MinusInfinityTest(SimpleTestCase):
    """Tests for the -infinity marker."""

    def test_representations(self):
        """Test string and float forms of the marker."""
        self.assertEqual(str(MINUS_INFINITY), '-inf')
        self.assertEqual(float(MINUS_INFINITY), float('-inf'))
        self.assertTrue(is_minus_infinity(MINUS_INFINITY))
        self.assertFalse(is_minus_infinity(float('-inf')))

    def test_sign(self):
        """Test sign_of on the marker and on numbers."""
        self.assertEqual(sign_of(MINUS_INFINITY), -1)
        self.assertEqual(sign_of(2.5), 1)
        self.assertEqual(sign_of(0.0), 0)


class MassTest(SimpleTestCase):
    """Tests for M(omega)."""

    def test_mass_at_zero_frequency(self):
        """Test M(0) for the closed-form pair."""
        self.assertAlmostEqual(mass(0.0, ModelParams(2, 3)), 9.0 * math.pi / 4.5 ** 1.5, places=10)

    def test_mass_matches_closed_form_quadrature(self):
        """Test M(omega) against quadrature of the closed form."""
        params = ModelParams(2, 3)
        for omega in (0.01, 0.1, 1.0):
            with self.subTest(omega=omega):
                self.assertAlmostEqual(mass(omega, params) / closed_form_mass(omega, params), 1.0, places=9)

    def test_negative_omega_rejected(self):
        """Test M refuses omega < 0."""
        with self.assertRaises(PreconditionError):
            mass(-0.5, ModelParams(2, 3))

    def test_zero_frequency_needs_p_below_five(self):
        """Test M(0) refuses p >= 5."""
        with self.assertRaises(PreconditionError):
            mass(0.0, ModelParams(5.5, 6))

    def test_report_rejects_negative_mass(self):
        """Test MassReport refuses a negative mass."""
        with self.assertRaises(NumericalFailure):
            MassReport(omega=0.1, mass=-1.0, mass_prime=0.0, method=MassMethod.INTEGRAL_FORMULA)


class MassPrimeTest(SimpleTestCase):
    """Tests for M'(omega)."""

    def test_formula_matches_finite_difference(self):
        """Test M'(omega) against finite differences."""
        for p, q in ((2, 3), (2, 3.5), (1.5, 2.5)):
            with self.subTest(p=p, q=q):
                params = ModelParams(p, q)
                formula = mass_prime(0.1, params)
                fd = mass_prime_fd(0.1, 1e-4, params)
                self.assertLess(abs(formula - fd) / abs(formula), 1e-4)

    def test_closed_form_derivative(self):
        """Test M'(omega) against the closed-form mass."""
        params = ModelParams(2, 3)
        omega, h = 0.2, 1e-4
        fd = (closed_form_mass(omega + h, params) - closed_form_mass(omega - h, params)) / (2 * h)
        self.assertAlmostEqual(mass_prime(omega, params) / fd, 1.0, places=5)

    def test_vanishes_on_boundary_line(self):
        """Test M'(0) = 0 on 2p + q = 7."""
        self.assertLess(abs(mass_prime(0.0, ModelParams(2, 3))), 1e-5)

    def test_minus_infinity_marker(self):
        """Test M'(0) is the marker for p >= 7/3."""
        self.assertIs(mass_prime(0.0, ModelParams(3, 4)), MINUS_INFINITY)
        self.assertIs(mass_prime(0.0, ModelParams(7 / 3, 3)), MINUS_INFINITY)

    def test_signs_off_boundary(self):
        """Test the sign of M'(0) on each side of 2p + q = 7."""
        self.assertGreater(mass_prime(0.0, ModelParams(1.5, 2.5)), 0.0)
        self.assertLess(mass_prime(0.0, ModelParams(2, 3.5)), 0.0)

    def test_near_critical_warning(self):
        """Test a warning near p = 7/3."""
        with self.assertLogs('waves.mass', level='WARNING') as logs:
            mass_prime(0.0, ModelParams(2.3, 3.5))
        self.assertIn('7/3', logs.output[0])

    def test_fd_needs_omega_above_step(self):
        """Test the central difference needs omega > h."""
        with self.assertRaises(PreconditionError):
            mass_prime_fd(1e-5, 1e-4, ModelParams(2, 3))

    @tag('slow')
    def test_sign_grid_matches_classification(self):
        """Test the sign of M'(0) on a grid against classify."""
        for p in (1.5, 2.0, 2.5, 3.0, 3.5):
            for dq in (0.3, 0.6, 0.9, 1.2, 1.4):
                params = ModelParams(p, p + dq)
                stability = model.classify(params)
                with self.subTest(p=p, q=params.q):
                    value = mass_prime(0.0, params, near_critical_band=0.0)
                    if p >= model.P_CRITICAL:
                        self.assertIs(value, MINUS_INFINITY)
                    elif stability.tag == StabilityTag.MASS_DERIV_POSITIVE:
                        self.assertGreater(value, 0.0)
                    else:
                        self.assertLess(value, 0.0)


class PairingIntegralTest(SimpleTestCase):
    """Tests for 2 int phi_0 eta_0 dx."""

    def test_minus_infinity_for_high_p(self):
        """Test the pairing integral is the marker for p >= 7/3."""
        self.assertIs(pairing_integral(ModelParams(3, 4)), MINUS_INFINITY)

    @tag('slow')
    def test_default_cut_matches_mass_derivative(self):
        """Test the default cut gives M'(0) to 1e-6 relative."""
        params = ModelParams(2, 3.5)
        direct = mass_prime(0.0, params)
        self.assertLess(abs(direct - pairing_integral(params)) / abs(direct), 1e-6)

    @tag('slow')
    def test_positive_frequency_approach(self):
        """Test the gap to M'(omega) shrinks as omega decreases."""
        params = ModelParams(2, 3.5)
        paired = pairing_integral(params)
        gaps = [abs(mass_prime(omega, params) - paired) for omega in (1e-1, 1e-2, 1e-3)]
        self.assertEqual(gaps, sorted(gaps, reverse=True))

    @tag('slow')
    def test_divergence_witness(self):
        """Test partial integrals pass a negative bound when p >= 7/3."""
        witness = divergence_witness(ModelParams(3, 4), bound=-10.0)
        self.assertIsNotNone(witness)
        self.assertLess(witness[1], -10.0)


class RichardsonLimitTest(SimpleTestCase):
    """Tests for extrapolation in the cut."""

    def test_recovers_power_law_limit(self):
        """Test extrapolation of I + C X^-s for s in {1, 2, 3}."""
        for s in (1.0, 2.0, 3.0):
            with self.subTest(s=s):
                values = [2.5 - 0.3 * x ** -s for x in (200.0, 400.0, 800.0)]
                self.assertAlmostEqual(richardson_limit(values), 2.5, places=12)

    def test_noise_returns_last_estimate(self):
        """Test non-contracting differences fall back to the last cut."""
        self.assertEqual(richardson_limit([1.0, 1.0, 1.0]), 1.0)
        self.assertEqual(richardson_limit([1.0, 1.1, 1.0]), 1.0)
        self.assertEqual(richardson_limit([1.0, 1.1, 1.2]), 1.2)


class IdentitiesTest(SimpleTestCase):
    """Tests for norms and the stationary-equation identities."""

    def test_norms_of_closed_form_profile(self):
        """Test L2 and gradient norms of the closed-form profile."""
        norms = profile_norms(get_evaluator(ModelParams(2, 3), 0.0))
        self.assertAlmostEqual(norms['l2_sq'], 2.0 * 9.0 * math.pi / 4.5 ** 1.5, places=9)
        self.assertAlmostEqual(norms['grad_sq'] / (2.0 * 144.0 * math.pi / (32.0 * 4.5 ** 2.5)), 1.0, places=9)

    def test_nehari_and_first_integral(self):
        """Test the Nehari and first-integral defects."""
        for omega in (0.0, 0.5):
            with self.subTest(omega=omega):
                defects = pohozaev_defects(get_evaluator(ModelParams(2, 3.5), omega))
                self.assertLess(abs(defects['nehari']), 1e-8)
                self.assertLess(abs(defects['first_integral']), 1e-8)

    def test_scaling_second_derivative_sign(self):
        """Test the sign of the scaling second derivative."""
        self.assertLess(scaling_second_derivative(ModelParams(2, 3.5)), 0.0)
        self.assertGreater(scaling_second_derivative(ModelParams(2, 3.2)), 0.0)


class MassReportTest(SimpleTestCase):
    """Tests for mass_report."""

    def test_integral_formula(self):
        """Test mass_report with the integral formula."""
        report = mass_report(0.0, ModelParams(3, 4))
        self.assertIs(report.mass_prime, MINUS_INFINITY)
        self.assertGreater(report.mass, 0.0)
        self.assertEqual(report.method, MassMethod.INTEGRAL_FORMULA)

    def test_finite_difference_method(self):
        """Test mass_report with finite differences."""
        report = mass_report(0.3, ModelParams(2, 3.5), method=MassMethod.FINITE_DIFFERENCE, h=1e-4)
        self.assertAlmostEqual(report.mass_prime / mass_prime(0.3, ModelParams(2, 3.5)), 1.0, places=4)

    def test_pairing_method_only_at_zero(self):
        """Test the pairing method refuses omega > 0."""
        with self.assertRaises(PreconditionError):
            mass_report(0.1, ModelParams(2, 3.5), method=MassMethod.PAIRING_INTEGRAL)
