"""
Mass M(omega) = 1/2 ||phi_omega||^2, its derivative and the pairing
int phi_0 eta_0 that M'(omega) tends to as omega -> 0.

M'(omega) is computed from

    M'(omega) = -a / (4 W_s(a)) int_0^1 (K(a) - K(a s)) / (J(a) - J(a s))^(3/2) ds,

using J(a) - J(a s) = W(a s; omega) / (a s), the Delta factor of the profile
evaluator, so both charts of the profile module apply unchanged.
"""
import enum
import logging
import math
from dataclasses import dataclass

import numpy as np

from . import model
from .eta import EtaZero
from .exceptions import NumericalFailure, PreconditionError
from .profile import T_SPLIT, U_SPLIT, get_evaluator
from .quadrature import adaptive_quad, geometric_breakpoints, loglog_fit, richardson_limit

logger = logging.getLogger(__name__)


class _MinusInfinity:
    """Tagged marker for M'(0) = -infinity; never produced by overflow."""

    sign = -1

    def __repr__(self):
        return "MINUS_INFINITY"

    def __str__(self):
        return "-inf"

    def __float__(self):
        return float('-inf')

    def __reduce__(self):
        return "MINUS_INFINITY"


MINUS_INFINITY = _MinusInfinity()


def is_minus_infinity(value):
    return value is MINUS_INFINITY


def sign_of(value):
    if is_minus_infinity(value):
        return -1
    return int(np.sign(value))


class MassMethod(str, enum.Enum):
    INTEGRAL_FORMULA = "IntegralFormula"
    FINITE_DIFFERENCE = "FiniteDifference"
    PAIRING_INTEGRAL = "PairingIntegral"


@dataclass(frozen=True)
class MassReport:
    omega: float
    mass: float
    mass_prime: object
    method: MassMethod

    def __post_init__(self):
        if not self.mass >= 0:
            raise NumericalFailure(f"negative mass {self.mass} at omega={self.omega}")


def _k_coefficients(params):
    p, q = params.p, params.q
    return (5.0 - p) / (p + 1.0), (5.0 - q) / (q + 1.0)


def k_eval(s, params):
    k_p, k_q = _k_coefficients(params)
    return -k_p * np.power(s, params.alpha) + k_q * np.power(s, params.beta)


def j_eval(s, params):
    p, q = params.p, params.q
    return -2.0 / (p + 1.0) * np.power(s, params.alpha) + 2.0 / (q + 1.0) * np.power(s, params.beta)


def _check_mass_domain(omega, params):
    if omega < 0:
        raise PreconditionError(f"omega must be nonnegative (omega={omega})")
    if omega == 0:
        params.require_l2_stationary()


def mass(omega, params, **tolerances):
    """1/2 ||phi_omega||^2 = int_0^inf phi_omega^2 dx."""
    _check_mass_domain(omega, params)
    ev = get_evaluator(params, omega, **tolerances)
    return ev.x_integral(lambda v: v)


def mass_prime(omega, params, near_critical_band=0.05, **tolerances):
    """M'(omega), or MINUS_INFINITY at omega = 0 when p >= 7/3."""
    if omega < 0:
        raise PreconditionError(f"omega must be nonnegative (omega={omega})")
    p = params.p
    if omega == 0:
        if p >= model.P_CRITICAL:
            return MINUS_INFINITY
        if p >= model.P_CRITICAL - near_critical_band:
            logger.warning("M'(0) at p=%s is within %s of 7/3: the integrand is barely integrable "
                           "and the result is less accurate", p, near_critical_band)

    ev = get_evaluator(params, omega, **tolerances)
    a, alpha, beta = ev.a, ev.alpha, ev.beta
    k_p, k_q = _k_coefficients(params)
    k_a = -k_p * ev.a_alpha + k_q * ev.a_beta

    def upper(u):
        u2 = u * u
        log_s = math.log1p(-u2)
        if u2 > 0:
            om_a = -math.expm1(alpha * log_s) / u2
            om_b = -math.expm1(beta * log_s) / u2
        else:
            om_a, om_b = alpha, beta
        numer = -k_p * ev.a_alpha * om_a + k_q * ev.a_beta * om_b
        return 2.0 * numer / float(ev.d_tilde(u2, log_s)) ** 1.5

    # omega = 0: subtract k_a A_p^(-3/2) e^(eps t) and add its integral back
    eps = 1.0 - 1.5 * alpha
    lead = k_a * ev.A_p ** -1.5 if omega == 0 else 0.0

    def lower(t):
        s = math.exp(t)
        delta = float(ev.lower_delta(t))
        if s == 0.0 or delta <= 0.0:
            return 0.0
        numer = -k_p * ev.a_alpha * -math.expm1(alpha * t) + k_q * ev.a_beta * -math.expm1(beta * t)
        value = s * numer / delta ** 1.5
        if lead:
            value -= lead * math.exp(eps * t)
        return value

    tol = ev.quad_tol
    integral = adaptive_quad(upper, 0.0, U_SPLIT, epsabs=tol, epsrel=tol, what="M' (upper chart)")
    integral += adaptive_quad(lower, -np.inf, T_SPLIT, epsabs=tol, epsrel=tol, what="M' (lower chart)")
    if lead:
        integral += lead * math.exp(eps * T_SPLIT) / eps
    return -a / (4.0 * ev.w_s_at_a) * integral


def mass_prime_fd(omega, h, params, **tolerances):
    if not omega > h > 0:
        raise PreconditionError(f"need omega > h > 0 (omega={omega}, h={h})")
    return (mass(omega + h, params, **tolerances) - mass(omega - h, params, **tolerances)) / (2.0 * h)


def _fitted_tail(integrand, x_cut):
    """int_X^inf of the power law fitted to the integrand on [X, 2X]."""
    xs = np.geomspace(x_cut, 2.0 * x_cut, 9)
    values = np.array([integrand(x) for x in xs])
    if np.any(np.sign(values) != np.sign(values[0])):
        raise NumericalFailure(f"phi_0 eta_0 changes sign on [{x_cut:.6g}, {2 * x_cut:.6g}]")
    k, c = loglog_fit(xs, values)
    if k >= -1.0:
        raise NumericalFailure(f"fitted tail power {k:.4f} is not integrable")
    return np.sign(values[0]) * math.exp(c) * x_cut ** (k + 1.0) / -(k + 1.0), k


def pairing_integral(params, tail_lengths=200.0, **tolerances):
    """2 int_0^inf phi_0 eta_0 dx.

    The integral is cut at X = tail_lengths characteristic lengths, then at 2X
    and 4X, each cut closed with a fitted power-law tail; the three results
    are extrapolated in the cut.
    """
    params.require_l2_stationary()
    e = EtaZero(params, **tolerances)
    x_tail = tail_lengths * params.characteristic_length

    def integrand(x):
        eta, phi = e.eta_and_phi(x)
        return float(phi[0] * eta[0])

    if params.p >= model.P_CRITICAL:
        g_tail = integrand(x_tail)
        if g_tail >= 0:
            raise NumericalFailure(f"phi_0 eta_0 is not negative at x={x_tail:.6g} for p >= 7/3")
        return MINUS_INFINITY

    tol = e.profile.quad_tol
    cuts = (x_tail, 2.0 * x_tail, 4.0 * x_tail)
    body = adaptive_quad(integrand, 0.0, x_tail, epsabs=tol, epsrel=tol,
                         points=geometric_breakpoints(0.0, x_tail), what="pairing integral")
    estimates = []
    for lo, hi in zip((0.0,) + cuts, cuts):
        if lo > 0:
            body += adaptive_quad(integrand, lo, hi, epsabs=tol, epsrel=tol, what="pairing integral")
        tail, k = _fitted_tail(integrand, hi)
        estimates.append(body + tail)
    value = richardson_limit(estimates)
    logger.info("pairing integral p=%s q=%s: cut estimates %s -> %.16g (tail power %.4f)",
                params.p, params.q, ["%.12g" % v for v in estimates], value, k)
    return 2.0 * value


def divergence_witness(params, bound=-10.0, x_max=1e8, **tolerances):
    """First X with 2 int_0^X phi_0 eta_0 dx < bound, or None below x_max."""
    e = EtaZero(params, **tolerances)

    def integrand(x):
        eta, phi = e.eta_and_phi(x)
        return float(phi[0] * eta[0])

    total = 0.0
    lo, hi = 0.0, 1.0
    while hi <= x_max:
        total += 2.0 * adaptive_quad(integrand, lo, hi, epsabs=1e-10, epsrel=1e-10, what="partial pairing")
        if total < bound:
            return hi, total
        lo, hi = hi, 2.0 * hi
    return None


def profile_norms(ev):
    """||phi||^2, ||phi'||^2, ||phi||_{p+1}^{p+1}, ||phi||_{q+1}^{q+1} over the whole line."""
    p, q = ev.params.p, ev.params.q
    if ev.omega == 0:
        ev.params.require_l2_stationary()
    a = ev.a
    return {
        'l2_sq': 2.0 * ev.x_integral(lambda v: v),
        'grad_sq': 2.0 * ev.x_chart_integral(lambda tau, delta: a * tau * delta),
        'lp1': 2.0 * ev.x_integral(lambda v: v ** (0.5 * (p + 1.0))),
        'lq1': 2.0 * ev.x_integral(lambda v: v ** (0.5 * (q + 1.0))),
    }


def scaling_second_derivative(params, **tolerances):
    """d^2/dlambda^2 S_0(lambda^(1/2) phi_0(lambda x)) at lambda = 1; negative iff q > gamma1(p)."""
    p, q = params.p, params.q
    norms = profile_norms(get_evaluator(params, 0.0, **tolerances))
    return (norms['grad_sq']
            + (p - 1.0) * (p - 3.0) / (4.0 * (p + 1.0)) * norms['lp1']
            - (q - 1.0) * (q - 3.0) / (4.0 * (q + 1.0)) * norms['lq1'])


def pohozaev_defects(ev):
    """Residuals of the Nehari and first-integral identities of phi_omega."""
    p, q = ev.params.p, ev.params.q
    n = profile_norms(ev)
    nehari = n['grad_sq'] + ev.omega * n['l2_sq'] + n['lp1'] - n['lq1']
    first_integral = (n['grad_sq'] - ev.omega * n['l2_sq']
                      - 2.0 / (p + 1.0) * n['lp1'] + 2.0 / (q + 1.0) * n['lq1'])
    return {'nehari': nehari, 'first_integral': first_integral}


def mass_report(omega, params, method=MassMethod.INTEGRAL_FORMULA, h=1e-3, near_critical_band=0.05,
                **tolerances):
    m = mass(omega, params, **tolerances)
    if method == MassMethod.INTEGRAL_FORMULA:
        derivative = mass_prime(omega, params, near_critical_band=near_critical_band, **tolerances)
    elif method == MassMethod.FINITE_DIFFERENCE:
        derivative = mass_prime_fd(omega, h, params, **tolerances)
    else:
        if omega != 0:
            raise PreconditionError("the pairing integral gives M'(0) only")
        derivative = pairing_integral(params, **tolerances)
    return MassReport(omega=omega, mass=m, mass_prime=derivative, method=MassMethod(method))
