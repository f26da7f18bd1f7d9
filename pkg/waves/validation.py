"""
Cross-check suites behind ``manage.py validate``.

Every check compares two independent routes to the same quantity and
records the measured residual next to its tolerance. A check that raises a
library error is recorded as failed with the error line.
"""
import logging
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import evolve, model
from .eta import EtaZero, eta0_closed_form, residual_linearized
from .exceptions import WaveLabError
from .mass import (
    mass_prime, mass_prime_fd, pairing_integral, pohozaev_defects, profile_norms, scaling_second_derivative, sign_of,
)
from .profile import get_evaluator, phi_closed_form
from .unstable import direct_quadform, find_unstable_direction, quadform_phi0_forms

logger = logging.getLogger(__name__)


@dataclass
class CheckResult:
    suite: str
    name: str
    passed: bool
    residual: float = None
    tolerance: float = None
    detail: str = ''


def _relative(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


class Suite:
    """Collects CheckResults; each check is a callable returning (residual, tolerance[, detail])."""

    name = None

    def __init__(self, config):
        self.config = config
        self.params = config.params
        self.tol = config.tolerances
        self.results = []

    def checks(self):
        return []

    def check(self, name, fn):
        try:
            outcome = fn()
        except WaveLabError as exc:
            self.results.append(CheckResult(self.name, name, False, detail=exc.one_line()))
            return
        if outcome is None:
            self.results.append(CheckResult(self.name, name, True, detail='not applicable'))
            return
        residual, tolerance, *rest = outcome
        passed = bool(residual <= tolerance)
        self.results.append(CheckResult(self.name, name, passed, float(residual), float(tolerance),
                                        rest[0] if rest else ''))
        logger.info("%s.%s: residual=%.3e tolerance=%.1e %s", self.name, name, residual, tolerance,
                    'pass' if passed else 'FAIL')

    def run(self):
        for name, fn in self.checks():
            self.check(name, fn)
        return self.results


class ModelSuite(Suite):
    name = 'model'

    def checks(self):
        return [
            ('a_zero_root', self.a_zero_root),
            ('a_prime_fd', self.a_prime_fd),
            ('classification_vs_scaling', self.virial_vs_scaling),
        ]

    def a_zero_root(self):
        a = model.a_zero(self.params)
        return abs(float(model.w_eval(a, 0.0, self.params))) / a, 1e-13

    def a_prime_fd(self):
        omega, h = 0.5, 1e-5
        fd = (model.a_omega(omega + h, self.params) - model.a_omega(omega - h, self.params)) / (2 * h)
        return _relative(fd, model.a_prime(omega, self.params)), 1e-6

    def virial_vs_scaling(self):
        if self.params.p >= 5:
            return None
        if abs(self.params.q - model.gamma1(self.params.p)) < 1e-9:
            return None
        negative = scaling_second_derivative(self.params, **self.tol) < 0
        agrees = negative == model.satisfies_virial_condition(self.params)
        return (0.0 if agrees else 1.0), 0.5, f"second derivative negative: {negative}"


class ProfileSuite(Suite):
    name = 'profile'

    def checks(self):
        return [
            ('closed_form', self.closed_form),
            ('nehari_identity', self.nehari),
            ('first_integral_identity', self.first_integral),
        ]

    def closed_form(self):
        if not self.params.has_closed_form:
            return None
        xs = np.linspace(0.0, 20.0, 201)
        worst = 0.0
        for omega in (0.0, 0.01, 0.1):
            ev = get_evaluator(self.params, omega, **self.tol)
            worst = max(worst, float(np.max(np.abs(ev.phi_array(xs) - phi_closed_form(xs, omega, self.params)))))
        return worst, 1e-8

    def _defects(self):
        ev = get_evaluator(self.params, 0.0 if self.params.p < 5 else 0.5, **self.tol)
        return pohozaev_defects(ev), ev

    def nehari(self):
        defects, ev = self._defects()
        return abs(defects['nehari']) / ev.a, 1e-8

    def first_integral(self):
        defects, ev = self._defects()
        return abs(defects['first_integral']) / ev.a, 1e-8


class EtaSuite(Suite):
    name = 'eta'

    def checks(self):
        return [
            ('closed_form', self.closed_form),
            ('linearized_residual', self.residual),
        ]

    def closed_form(self):
        if not self.params.has_closed_form:
            return None
        xs = np.linspace(0.0, 50.0, 251)
        e = EtaZero(self.params, **self.tol)
        exact = eta0_closed_form(xs, self.params)
        scale = np.maximum(np.abs(exact), 1e-3 * abs(exact[0]))
        return float(np.max(np.abs(e.eta_array(xs) - exact) / scale)), 1e-6

    def residual(self):
        e = EtaZero(self.params, **self.tol)
        return residual_linearized(np.linspace(0.1, 10.0, 100), e), 1e-4


class MassSuite(Suite):
    name = 'mass'

    def checks(self):
        return [
            ('formula_vs_fd', self.formula_vs_fd),
            ('sign_vs_classification', self.sign_vs_class),
            ('pairing_identity', self.pairing),
        ]

    def formula_vs_fd(self):
        omega = 0.1
        formula = mass_prime(omega, self.params, **self.tol)
        fd = mass_prime_fd(omega, 1e-4, self.params, **self.tol)
        return _relative(formula, fd), 1e-4

    def sign_vs_class(self):
        if self.params.p >= 5:
            return None
        tag = model.classify(self.params).tag
        expected = {
            model.StabilityTag.MASS_DERIV_POSITIVE: 1,
            model.StabilityTag.MASS_DERIV_ZERO: 0,
            model.StabilityTag.MASS_DERIV_NEGATIVE_FINITE: -1,
            model.StabilityTag.MASS_DERIV_MINUS_INFINITY: -1,
        }[tag]
        value = mass_prime(0.0, self.params, **self.tol)
        if expected == 0:
            return abs(float(value)), 1e-5, tag.value
        return (0.0 if sign_of(value) == expected else 1.0), 0.5, tag.value

    def pairing(self):
        if self.params.p >= model.P_CRITICAL or model.classify(self.params).tag == model.StabilityTag.MASS_DERIV_ZERO:
            return None
        direct = mass_prime(0.0, self.params, **self.tol)
        paired = pairing_integral(self.params, self.config['pairing_tail_lengths'], **self.tol)
        return _relative(direct, paired), 1e-5


class UnstableSuite(Suite):
    name = 'unstable'

    def __init__(self, config):
        super().__init__(config)
        self._direction = None

    def checks(self):
        return [
            ('quadform_phi0_forms', self.forms),
            ('orthogonality', self.orthogonality),
            ('direct_vs_decomposed', self.direct_vs_decomposed),
            ('negative_at_R', self.negative_at_r),
        ]

    def forms(self):
        if self.params.p >= 5:
            return None
        forms = quadform_phi0_forms(self.params, **self.tol)
        values = list(forms.values())
        return max(_relative(values[0], v) for v in values[1:]), 1e-8

    def direction(self):
        """(R, report) of the first unstable radius, or None outside the unstable classes."""
        if not model.classify(self.params).is_unstable_branch or self.params.q >= 5:
            return None
        if self._direction is None:
            try:
                self._direction = find_unstable_direction(
                    self.params, self.config['r_schedule'], cond_tol=self.config['cond_tol'],
                    orthogonality_tol=self.config['orthogonality_tol'], **self.tol)
            except WaveLabError as exc:
                self._direction = exc
        if isinstance(self._direction, WaveLabError):
            raise self._direction
        return self._direction

    def orthogonality(self):
        found = self.direction()
        if found is None:
            return None
        _, report = found
        l2_sq = profile_norms(get_evaluator(self.params, 0.0, **self.tol))['l2_sq']
        return report.orthogonality_defect / l2_sq, self.config['orthogonality_tol']

    def direct_vs_decomposed(self):
        found = self.direction()
        if found is None:
            return None
        R, report = found
        direct = direct_quadform(R, EtaZero(self.params, **self.tol), report.beta_R)
        return _relative(report.total, direct), 1e-4, f"R={R:.6g}"

    def negative_at_r(self):
        found = self.direction()
        if found is None:
            return None
        R, report = found
        return (0.0 if report.total < 0 else 1.0), 0.5, f"R={R:.6g} total={report.total:.10g}"


class EvolveSuite(Suite):
    """Short, coarse runs: conservation, gauge covariance and parity."""

    name = 'evolve'
    N = 2 ** 10
    T = 0.5

    def checks(self):
        return [
            ('charge_conservation', self.charge),
            ('gauge_covariance', self.gauge),
            ('parity', self.parity),
        ]

    def _state(self):
        if self.params.q >= 5:
            return None
        half_width = 20.0 * self.params.characteristic_length
        x = evolve.grid(half_width, self.N)
        u0 = 0.5 * np.exp(-(x / (2.0 * self.params.characteristic_length)) ** 2)
        return evolve.FieldState(u0, half_width, self.N, dt=1e-3)

    def _run(self, state):
        return evolve.run(state, self.T, self.params, sample_every=100)

    def charge(self):
        state = self._state()
        if state is None:
            return None
        before = evolve.charge(state)
        after = evolve.charge(self._run(state))
        return _relative(before, after), 1e-10

    def gauge(self):
        state = self._state()
        if state is None:
            return None
        angle = math.pi / 3
        rotated = self._run(evolve.apply_gauge(state, angle))
        plain = self._run(state)
        return float(np.max(np.abs(rotated.values - np.exp(1j * angle) * plain.values))), 1e-10

    def parity(self):
        state = self._state()
        if state is None:
            return None
        return evolve.parity_defect(self._run(state)), 1e-10


SUITES = (ModelSuite, ProfileSuite, EtaSuite, MassSuite, UnstableSuite, EvolveSuite)


def run_suites(config, suites=SUITES):
    results = []
    for suite in suites:
        results.extend(suite(config).run())
    return {
        'p': config.p,
        'q': config.q,
        'passed': all(r.passed for r in results),
        'checks': [asdict(r) for r in results],
    }
