"""
Test cases for the split-step evolution.

Tests cover:
- grid, wavenumbers and the free Gaussian oracle (linear step alone)
- charge and energy conservation, second-order energy drift, gauge covariance, parity
- modulation distance: zero on the orbit of the profile, small perturbations
- init_state: stationary data, recorded lambda, action deficit along psi_R, box checks
- NaN detection and the exit report
- instability and standing-wave experiments (slow)
"""
import math

import numpy as np
from django.test import SimpleTestCase, tag

from waves import evolve
from waves.exceptions import EvolutionBlowup, NotApplicable, PreconditionError
from waves.model import ModelParams
from waves.profile import get_evaluator
from waves.unstable import UnstableDirectionReport


def gaussian_state(n=2 ** 10, half_width=40.0, amplitude=0.5, dt=1e-3):
    x = evolve.grid(half_width, n)
    return evolve.FieldState(amplitude * np.exp(-x ** 2 / 4.0), half_width, n, dt=dt)


class GridTest(SimpleTestCase):
    """Tests for the periodic grid."""

    def test_grid(self):
        """Test grid endpoints and midpoint."""
        x = evolve.grid(10.0, 8)
        self.assertEqual(x[0], -10.0)
        self.assertAlmostEqual(x[-1], 7.5, places=14)
        self.assertEqual(x[4], 0.0)

    def test_wavenumbers(self):
        """Test FFT wavenumber ordering."""
        k = evolve.wavenumbers(math.pi, 8)
        np.testing.assert_allclose(k, [0, 1, 2, 3, -4, -3, -2, -1], atol=1e-14)

    def test_spectral_derivative(self):
        """Test the spectral derivative of sin(3x)."""
        half_width = math.pi
        x = evolve.grid(half_width, 64)
        np.testing.assert_allclose(evolve.derivative(np.sin(3 * x), half_width).real, 3 * np.cos(3 * x), atol=1e-12)

    def test_state_validation(self):
        """Test FieldState rejects bad sizes and steps."""
        with self.assertRaises(PreconditionError):
            evolve.FieldState(np.zeros(100), 10.0, 100)
        with self.assertRaises(PreconditionError):
            evolve.FieldState(np.zeros(64), 10.0, 32)
        with self.assertRaises(PreconditionError):
            evolve.FieldState(np.zeros(64), 10.0, 64, dt=0.0)


class LinearStepTest(SimpleTestCase):
    """Tests for the linear multiplier against the free solution."""

    def test_free_gaussian(self):
        """Test the linear step against the exact free Gaussian."""
        params = ModelParams(2, 3)
        half_width, n = 50.0, 2 ** 11
        x = evolve.grid(half_width, n)
        state = evolve.FieldState(evolve.free_gaussian(x, 0.0), half_width, n, dt=0.05)
        evolve.run(state, 1.0, params, sample_every=5, nonlinear=False)
        self.assertAlmostEqual(state.t, 1.0, places=12)
        error = np.max(np.abs(state.values - evolve.free_gaussian(x, 1.0)))
        self.assertLess(error, 1e-10)


class ConservationTest(SimpleTestCase):
    """Tests for the invariants of the split-step flow."""

    params = ModelParams(2, 3.5)

    def test_charge_conserved(self):
        """Test charge is conserved to round-off."""
        state = gaussian_state()
        before = evolve.charge(state)
        evolve.run(state, 1.0, self.params, sample_every=100)
        self.assertLess(abs(evolve.charge(state) - before) / before, 1e-10)

    def test_energy_conserved(self):
        """Test energy drift over a unit time."""
        state = gaussian_state()
        before = evolve.energy(state, self.params)
        evolve.run(state, 1.0, self.params, sample_every=100)
        self.assertLess(abs(evolve.energy(state, self.params) - before) / abs(before), 1e-5)

    def test_history_rows(self):
        """Test history sampling and row layout."""
        state = gaussian_state()
        state.reference = state.values.real.copy()
        evolve.run(state, 0.5, self.params, sample_every=100)
        self.assertEqual(len(state.history), 6)
        self.assertEqual(len(state.history[0]), 5)
        self.assertAlmostEqual(state.history[0][3], 0.0, places=12)

    def test_gauge_covariance(self):
        """Test a constant phase commutes with the flow."""
        angle = 0.7
        rotated = evolve.run(evolve.apply_gauge(gaussian_state(), angle), 0.5, self.params)
        plain = evolve.run(gaussian_state(), 0.5, self.params)
        self.assertLess(np.max(np.abs(rotated.values - np.exp(1j * angle) * plain.values)), 1e-11)

    def test_parity_preserved(self):
        """Test even data stays even."""
        state = evolve.run(gaussian_state(), 0.5, self.params)
        self.assertLess(evolve.parity_defect(state), 1e-11)

    def test_charge_and_action(self):
        """Test charge of a Gaussian and the action identity."""
        state = gaussian_state()
        # 1/2 int 0.25 exp(-x^2 / 2) dx
        self.assertAlmostEqual(evolve.charge(state), 0.125 * math.sqrt(2 * math.pi), places=12)
        self.assertAlmostEqual(evolve.action(state, 0.3, self.params),
                               evolve.energy(state, self.params) + 0.3 * evolve.charge(state), places=14)

    def test_nan_aborts_with_last_healthy_state(self):
        """Test a NaN aborts the run with the last finite state."""
        state = gaussian_state()
        state.values[10] = np.nan
        with self.assertRaises(EvolutionBlowup) as ctx:
            evolve.run(state, 0.01, self.params, sample_every=5)
        self.assertEqual(ctx.exception.last_healthy.t, 0.0)


class ModulationDistanceTest(SimpleTestCase):
    """Tests for the phase-minimized H1 distance."""

    def setUp(self):
        self.params = ModelParams(2, 3)
        self.half_width, self.n = 60.0, 2 ** 12
        x = evolve.grid(self.half_width, self.n)
        self.phi = get_evaluator(self.params, 0.0).phi_array(x)
        self.x = x

    def state(self, values):
        return evolve.FieldState(values, self.half_width, self.n, reference=self.phi)

    def test_zero_on_profile(self):
        """Test the distance vanishes on the profile."""
        self.assertAlmostEqual(evolve.modulation_distance(self.state(self.phi)), 0.0, places=12)

    def test_phase_invariant(self):
        """Test the distance ignores a constant phase."""
        rotated = np.exp(1j * math.pi / 3) * self.phi
        self.assertAlmostEqual(evolve.modulation_distance(self.state(rotated)), 0.0, places=12)

    def test_small_perturbation(self):
        """Test the distance is bounded by the perturbation size."""
        bump = np.exp(-(self.x - 5.0) ** 2)
        distance = evolve.modulation_distance(self.state(self.phi + 0.01 * bump))
        self.assertGreater(distance, 0.0)
        self.assertLessEqual(distance, 0.01 * evolve.h1_norm(bump, self.half_width) + 1e-14)

    def test_zero_overlap_uses_zero_phase(self):
        """Test zero data gives the norm of the profile."""
        distance = evolve.modulation_distance(self.state(np.zeros(self.n)))
        self.assertAlmostEqual(distance, evolve.h1_norm(self.phi, self.half_width), places=12)

    def test_reference_must_match_grid(self):
        """Test a reference of the wrong length is refused."""
        with self.assertRaises(PreconditionError):
            evolve.modulation_distance(self.state(self.phi), reference=self.phi[:10])


class InitStateTest(SimpleTestCase):
    """Tests for init_state."""

    params = ModelParams(2, 3.5)

    def test_stationary_data(self):
        """Test lambda = 0 gives the windowed profile."""
        state = evolve.init_state(self.params, 0.0, n=2 ** 12)
        np.testing.assert_array_equal(state.values.real, state.reference)
        self.assertAlmostEqual(evolve.modulation_distance(state), 0.0, places=12)
        self.assertEqual(state.lam, 0.0)

    def test_short_box_warns(self):
        """Test a short box logs a warning."""
        with self.assertLogs('waves.evolve', level='WARNING'):
            evolve.init_state(self.params, 0.0, half_width=20.0, n=2 ** 10)

    def test_perturbation_needs_radius(self):
        """Test a nonzero lambda needs R."""
        with self.assertRaises(PreconditionError):
            evolve.init_state(self.params, 0.01, n=2 ** 10)

    def test_radius_must_fit_window(self):
        """Test psi_R must fit inside the window plateau."""
        with self.assertRaises(PreconditionError):
            evolve.init_state(self.params, 0.01, R=30.0, half_width=100.0, n=2 ** 12)

    def test_experiment_schedule_fits_window(self):
        """Test every experiment radius fits the window."""
        half_width = 100.0 * self.params.characteristic_length
        radii = [r * self.params.characteristic_length for r in evolve.experiment_schedule(half_width, self.params)]
        self.assertTrue(all(2 * r <= half_width / evolve.WINDOW_DIVISOR for r in radii))

    @tag('slow')
    def test_action_deficit_along_unstable_direction(self):
        """Test both signs of lambda lower the action."""
        half_width = 100.0 * self.params.characteristic_length
        R = evolve.default_radius(self.params, half_width)
        base = evolve.init_state(self.params, 0.0, half_width=half_width)
        action0 = evolve.action(base, 0.0, self.params)
        deficits = []
        for lam in (0.01, -0.01):
            state = evolve.init_state(self.params, lam, R, half_width)
            deficits.append(evolve.action(state, 0.0, self.params) - action0)
        self.assertLess(deficits[0], 0.0)
        self.assertLess(deficits[1], 0.0)

    def test_experiment_needs_unstable_class(self):
        """Test the experiment refuses a stable class."""
        with self.assertRaises(NotApplicable):
            evolve.instability_experiment(ModelParams(1.5, 2.5), t_max=0.1)

    def test_mismatched_direction_rejected(self):
        """Test a quadform report for another radius is refused."""
        report = UnstableDirectionReport(R=20.0, beta_R=1.0, term_phi0=-1.0, cross_term=0.0, square_term=0.0,
                                         total=-1.0, predicted_limit=None, orthogonality_defect=0.0)
        with self.assertRaises(PreconditionError):
            evolve.unstable_direction_on_grid(self.params, 10.0, evolve.grid(100.0, 64), direction=report)

    @tag('slow')
    def test_default_lambda_recorded_on_state(self):
        """Test the H1-relative lambda is used and kept on the state."""
        half_width = 100.0 * self.params.characteristic_length
        R, direction = evolve.default_direction(self.params, half_width)
        self.assertEqual(direction.R, R)
        self.assertLess(direction.total, 0.0)
        state = evolve.init_state(self.params, None, R, half_width, direction=direction)
        expected = evolve._default_lambda(self.params, R, half_width, 2 ** 14, 1e-2, direction)
        self.assertGreater(state.lam, 0.0)
        self.assertAlmostEqual(state.lam / expected, 1.0, places=12)
        self.assertEqual(state.copy().lam, state.lam)


class ExitReportTest(SimpleTestCase):
    """Tests for exit_report."""

    def test_exit_detection(self):
        """Test exit time and peak distance."""
        state = gaussian_state()
        state.history = [(0.0, 1.0, 1.0, 0.01, 1.0), (1.0, 1.0, 1.0, 0.05, 1.0), (2.0, 1.0, 1.0, 0.2, 1.0)]
        report = evolve.exit_report(state, 0.01, 10.0)
        self.assertTrue(report.exited)
        self.assertEqual(report.t_exit, 2.0)
        self.assertEqual(report.peak_distance, 0.2)
        self.assertAlmostEqual(report.threshold, 0.1, places=15)

    def test_no_exit(self):
        """Test a run that stays inside the neighbourhood."""
        state = gaussian_state()
        state.history = [(0.0, 1.0, 1.0, 0.01, 1.0), (1.0, 1.0, 1.0, 0.02, 1.0)]
        report = evolve.exit_report(state, -0.01, 10.0)
        self.assertFalse(report.exited)
        self.assertIsNone(report.t_exit)


@tag('slow')
class LongRunTest(SimpleTestCase):
    """Full-size runs at the default grid."""

    def test_stationary_run_stays_close(self):
        """Test the stationary run stays near the orbit up to t = 10."""
        params = ModelParams(2, 3.5)
        state = evolve.init_state(params, 0.0)
        evolve.run(state, 10.0, params, sample_every=500)
        self.assertLess(max(row[3] for row in state.history), 1e-3)
        charges = [row[2] for row in state.history]
        self.assertLess(abs(charges[-1] - charges[0]) / charges[0], 1e-10)

    def test_gap_region_instability(self):
        """Test a gap-region pair leaves the neighbourhood."""
        radius, reports = evolve.instability_experiment(ModelParams(2.2, 3.0), lam=None, t_max=50.0)
        self.assertGreater(radius, 0.0)
        self.assertTrue(any(r.exited for r in reports))

    def test_standing_wave_contrast(self):
        """Test a positive-frequency wave stays close."""
        report = evolve.standing_wave_experiment(ModelParams(1.5, 2.5), 1.0, 1e-2, t_max=50.0)
        self.assertFalse(report.exited)
        self.assertLess(report.peak_distance, 2.0 * report.initial_distance)

    def test_energy_drift_is_second_order(self):
        """Test energy drift is small and second order in dt."""
        params = ModelParams(2, 3.5)
        drifts = []
        for dt, every in ((1e-3, 100), (5e-4, 200)):
            state = gaussian_state(dt=dt)
            evolve.run(state, 10.0, params, sample_every=every)
            energies = np.array([row[1] for row in state.history])
            drifts.append(float(np.max(np.abs(energies - energies[0]))) / abs(energies[0]))
        self.assertLess(drifts[0], 1e-6)
        self.assertGreater(drifts[0] / drifts[1], 3.0)
