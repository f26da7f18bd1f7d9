"""
Test cases for the unstable direction psi_R = phi_0 + beta_R chi_R eta_0.

Tests cover:
- the cutoff chi_R and its analytic derivatives
- the three expressions of <L0 phi_0, phi_0>
- beta_R orthogonality, checked by independent quadrature
- the assembled quadratic form against a direct finite-difference quadrature
- convergence toward the predicted limit and band decay rates
- beta_R and band rates on the M'(0) = -infinity branch
- find_unstable_direction outcomes, including NotApplicable
- the positive-frequency direction and its quadratic-form identity
"""
import math

import numpy as np
from django.test import SimpleTestCase, tag
from scipy import integrate

from waves.eta import EtaZero
from waves.exceptions import NotApplicable, PreconditionError
from waves.model import ModelParams
from waves.unstable import (
    band_decay_rates, beta_R, convergence_table, direct_quadform, expected_band_rates, find_unstable_direction,
    make_cutoff, positive_frequency_direction, quadform_phi0, quadform_phi0_forms, quadform_terms,
)


class CutoffTest(SimpleTestCase):
    """Tests for chi_R."""

    def setUp(self):
        self.cutoff = make_cutoff(3.0)

    def test_plateau_and_support(self):
        """Test chi_R is 1 on [0, R] and 0 beyond 2R."""
        xs = np.array([0.0, 1.0, 3.0, -3.0, 6.0, -6.0, 10.0])
        np.testing.assert_array_equal(self.cutoff.chi(xs), [1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0])

    def test_monotone_transition(self):
        """Test chi_R decreases across the band."""
        values = self.cutoff.chi(np.linspace(3.0, 6.0, 50))
        self.assertTrue(np.all(np.diff(values) <= 0))
        self.assertTrue(np.all((values >= 0) & (values <= 1)))

    def test_derivatives_match_finite_differences(self):
        """Test chi_R' and chi_R'' against finite differences."""
        h = 1e-5
        for x in (3.5, 4.5, -5.2):
            with self.subTest(x=x):
                chi = self.cutoff.chi
                d1 = (chi(x + h) - chi(x - h)) / (2 * h)
                d2 = (chi(x + h) - 2 * chi(x) + chi(x - h)) / (h * h)
                self.assertAlmostEqual(float(self.cutoff.chi_prime(x)), float(d1), places=7)
                self.assertAlmostEqual(float(self.cutoff.chi_double_prime(x)), float(d2), places=3)

    def test_radius_must_be_positive(self):
        """Test make_cutoff refuses R <= 0."""
        with self.assertRaises(PreconditionError):
            make_cutoff(0.0)


class QuadformPhi0Test(SimpleTestCase):
    """Tests for <L0 phi_0, phi_0>."""

    def test_closed_form_value(self):
        """Test <L0 phi_0, phi_0> for (2, 3)."""
        c = 4.5
        grad_sq = 288.0 * (math.pi / 32.0) / c ** 2.5
        lq1 = 2592.0 * (5.0 * math.pi / 32.0) / c ** 3.5
        self.assertAlmostEqual(quadform_phi0(ModelParams(2, 3)) / (-grad_sq - lq1), 1.0, places=9)

    def test_forms_agree(self):
        """Test the three expressions agree."""
        for p, q in ((2, 3.5), (2.2, 3.0), (3, 4)):
            with self.subTest(p=p, q=q):
                forms = list(quadform_phi0_forms(ModelParams(p, q)).values())
                for other in forms[1:]:
                    self.assertAlmostEqual(other / forms[0], 1.0, places=8)

    def test_negative(self):
        """Test <L0 phi_0, phi_0> is negative."""
        self.assertLess(quadform_phi0(ModelParams(2, 3.5)), 0.0)


class ExpectedRatesTest(SimpleTestCase):
    """Tests for the band decay exponents."""

    def test_expected_rates(self):
        """Test the band exponents for p = 2."""
        rates = expected_band_rates(ModelParams(2, 3.5))
        self.assertEqual(rates, {'band_phi': -3.0, 'band_eta': -1.0})


class FindUnstableDirectionTest(SimpleTestCase):
    """Tests for find_unstable_direction preconditions."""

    def test_positive_class_not_applicable(self):
        """Test a positive class has no direction."""
        with self.assertRaises(NotApplicable):
            find_unstable_direction(ModelParams(1.5, 2.5))

    def test_zero_class_not_applicable(self):
        """Test the boundary class has no direction."""
        with self.assertRaises(NotApplicable):
            find_unstable_direction(ModelParams(2, 3))

    @tag('slow')
    def test_unstable_direction_found(self):
        """Test a direction is found for each unstable pair."""
        for p, q in ((2, 3.5), (2.2, 3.0), (2.5, 3.2)):
            with self.subTest(p=p, q=q):
                R, report = find_unstable_direction(ModelParams(p, q))
                self.assertLess(report.total, 0.0)
                self.assertEqual(R, report.R)
                self.assertLess(report.orthogonality_defect, 1e-8)


class QuadformTermsTest(SimpleTestCase):
    """Tests for the assembled quadratic form at a single radius."""

    params = ModelParams(2, 3.5)

    @tag('slow')
    def test_orthogonality_by_independent_quadrature(self):
        """Test (psi_R, phi_0) = 0 by an independent quadrature."""
        e = EtaZero(self.params)
        R = 50.0 * self.params.characteristic_length
        beta, _ = beta_R(R, e)
        cutoff = make_cutoff(R)
        overlap, _ = integrate.quad(lambda x: float(cutoff.chi(x)) * e.eta0(x) * e.profile.phi(x), 0.0, 2.0 * R,
                                    points=[1.0, 10.0, R], epsabs=1e-12, epsrel=1e-12, limit=500)
        l2_sq = 2.0 * e.profile.x_integral(lambda v: v)
        self.assertLess(abs(l2_sq + 2.0 * beta * overlap) / l2_sq, 1e-8)

    @tag('slow')
    def test_total_matches_direct_quadrature(self):
        """Test the decomposition against direct quadrature."""
        e = EtaZero(self.params)
        R = 50.0 * self.params.characteristic_length
        report = quadform_terms(R, e)
        direct = direct_quadform(R, e, report.beta_R)
        self.assertLess(abs(report.total - direct) / abs(report.total), 1e-4)

    @tag('slow')
    def test_convergence_to_predicted_limit(self):
        """Test the limit and band rates for (2, 3.5)."""
        reports = convergence_table(self.params)
        last = reports[-1]
        self.assertLess(abs(last.total - last.predicted_limit) / abs(last.predicted_limit), 0.02)
        rates = band_decay_rates(reports)
        expected = expected_band_rates(self.params)
        self.assertLess(abs(rates['band_phi'] - expected['band_phi']), 0.3)
        self.assertLess(abs(rates['band_eta'] - expected['band_eta']), 0.3)

    @tag('slow')
    def test_minus_infinity_branch_limit(self):
        """Test the limit is <L0 phi_0, phi_0> for p >= 7/3."""
        params = ModelParams(2.5, 3.2)
        last = convergence_table(params)[-1]
        self.assertEqual(last.predicted_limit, last.term_phi0)
        self.assertLess(abs(last.total - last.term_phi0) / abs(last.term_phi0), 0.02)


class HighPowerRatesTest(SimpleTestCase):
    """Tests for band and beta_R rates on the M'(0) = -infinity branch."""

    cases = {
        (2.5, 3.2): lambda R: R ** (-3.0 + 4.0 / 1.5),
        (7 / 3, 3.2): lambda R: 1.0 / math.log(R),
    }

    @tag('slow')
    def test_band_rates(self):
        """Test the band slopes on the M'(0) = -infinity branch."""
        for p, q in self.cases:
            params = ModelParams(p, q)
            rates = band_decay_rates(convergence_table(params))
            expected = expected_band_rates(params)
            with self.subTest(p=p, q=q, rates=rates):
                self.assertLess(abs(rates['band_phi'] - expected['band_phi']), 0.3)
                self.assertLess(abs(rates['band_eta'] - expected['band_eta']), 0.3)

    @tag('slow')
    def test_beta_follows_h_p(self):
        """Test beta_R follows h_p(R) over the last two radii."""
        for (p, q), h_p in self.cases.items():
            reports = convergence_table(ModelParams(p, q))
            scaled = [abs(r.beta_R) / h_p(r.R) for r in reports]
            with self.subTest(p=p, q=q, scaled=scaled):
                self.assertLess(abs(reports[-1].beta_R), abs(reports[0].beta_R))
                self.assertLess(abs(scaled[-1] - scaled[-2]) / scaled[-1], 0.5)


class PositiveFrequencyDirectionTest(SimpleTestCase):
    """Tests for psi_omega at omega > 0."""

    def test_identity(self):
        """Test the positive-frequency quadratic-form identity."""
        report = positive_frequency_direction(ModelParams(2, 3.5), 0.5)
        self.assertAlmostEqual(report.quadform_psi_quadrature / report.quadform_psi_closed, 1.0, places=6)
        self.assertLess(report.orthogonality_defect / report.l2_sq, 1e-8)
        self.assertAlmostEqual(report.extras['eta_phi'] / report.mass_prime, 1.0, places=8)

    def test_requires_positive_omega(self):
        """Test the positive-frequency direction refuses omega = 0."""
        with self.assertRaises(PreconditionError):
            positive_frequency_direction(ModelParams(2, 3.5), 0.0)
