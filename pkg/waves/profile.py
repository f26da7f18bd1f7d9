"""
Profile evaluator: the quadrature representation F(tau; omega), its inverse
G, their partial derivatives and the profile phi_omega itself.

With tau = phi^2 / a the stationary equation integrates to

    F(tau; omega) = int_tau^1 ds / sqrt(s W(a s; omega)) = b |x|.

Writing W(a s; omega) = a s Delta(s), the factor

    Delta(s) = omega (1 - s^beta) + A_p s^alpha (1 - s^(beta - alpha)),
    A_p = 2 a^alpha / (p + 1),

is a sum of nonnegative terms, vanishes linearly at s = 1 and is evaluated
without cancellation at both ends. Two charts cover (0, 1]:

    upper   s = 1 - u^2,   u in [0, sqrt(1/2)]    removes the 1/sqrt(1-s) singularity
    lower   s = exp(t),    t in (-inf, log(1/2)]  resolves the growth of F as tau -> 0

Inversion runs on a cumulative table of chart segments (the lower chart is
extended lazily, only as far as requested) with a safeguarded Newton
iteration on segment-local Gauss-Legendre partial integrals.
"""
import functools
import logging
import math
import threading

import numpy as np
from scipy import optimize

from . import model
from .exceptions import PreconditionError, RootBracketError
from .quadrature import adaptive_quad, loglog_fit

logger = logging.getLogger(__name__)

UPPER_SEGMENTS = 32
U_SPLIT = math.sqrt(0.5)
T_SPLIT = math.log(0.5)
LOWER_STEP = math.log(10.0) / 8.0
# below this tau phi_omega^2 underflows in double precision
T_FLOOR = math.log(1e-300)
TAU_FIT_FLOOR = 1e-250

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)

UPPER, LOWER, UNDERFLOW = 0, 1, 2


def _om(gamma, log_s):
    """1 - s^gamma."""
    return -np.expm1(gamma * log_s)


def _om_over(gamma, log_s, u2):
    """(1 - s^gamma) / (1 - s), with its limit gamma at s = 1."""
    positive = u2 > 0
    safe = np.where(positive, u2, 1.0)
    return np.where(positive, _om(gamma, log_s) / safe, gamma)


class ProfileEvaluator:
    """All profile quantities attached to one frequency omega >= 0."""

    def __init__(self, params, omega=0.0, quad_tol=1e-13, inv_tol=1e-14, tail_tau=1e-14):
        if not (math.isfinite(omega) and omega >= 0):
            raise PreconditionError(f"omega must be finite and nonnegative (omega={omega})")
        if not (quad_tol > 0 and inv_tol > 0 and 0 < tail_tau < 1):
            raise PreconditionError(
                f"bad tolerances (quad_tol={quad_tol}, inv_tol={inv_tol}, tail_tau={tail_tau})")
        self.params = params
        self.omega = float(omega)
        self.quad_tol = quad_tol
        self.inv_tol = inv_tol
        self.tail_tau = tail_tau

        self.alpha = params.alpha
        self.beta = params.beta
        self.a = model.a_omega(self.omega, params)
        self.b = 2.0 / math.sqrt(self.a)
        self.a_alpha = self.a ** self.alpha
        self.a_beta = self.a ** self.beta
        self.A_p = 2.0 / (params.p + 1.0) * self.a_alpha
        self.w_s_at_a = model.w_s_eval(self.a, self.omega, params)
        # F_omega = c_omega * raw; c_omega > 0 because W_s(a) < 0
        self.c_omega = -self.a / (2.0 * self.w_s_at_a)

        self._lock = threading.Lock()
        self._upper_nodes = None
        self._upper_z = None
        self._upper_w = None
        self._lower_nodes = []
        self._lower_z = []
        self._lower_w = []
        self._lower_exhausted = False
        self._tail = None

        logger.info("profile evaluator p=%s q=%s omega=%s: a=%.16g b=%.16g",
                    params.p, params.q, self.omega, self.a, self.b)

    def __repr__(self):
        return f"<ProfileEvaluator p={self.params.p} q={self.params.q} omega={self.omega}>"

    # -- chart integrands ---------------------------------------------------

    def d_tilde(self, u2, log_s):
        """Delta / u^2 in the upper chart."""
        return (self.omega * _om_over(self.beta, log_s, u2)
                + self.A_p * np.exp(self.alpha * log_s) * _om_over(self.beta - self.alpha, log_s, u2))

    def _upper_rates(self, u):
        """dF/du and d(raw F_omega)/du in the upper chart."""
        u = np.asarray(u, dtype=float)
        u2 = u * u
        log_s = np.log1p(-u2)
        s = 1.0 - u2
        d_tilde = self.d_tilde(u2, log_s)
        n_tilde = (self.a_alpha * _om_over(self.alpha, log_s, u2)
                   - self.a_beta * _om_over(self.beta, log_s, u2))
        d_f = 2.0 / (s * np.sqrt(self.a * d_tilde))
        d_w = 2.0 * n_tilde / (self.a ** 1.5 * s * d_tilde ** 1.5)
        return d_f, d_w

    def _lower_rates(self, t):
        """-dF/dt and -d(raw F_omega)/dt in the lower chart."""
        t = np.asarray(t, dtype=float)
        delta = self.lower_delta(t)
        n = self.a_alpha * _om(self.alpha, t) - self.a_beta * _om(self.beta, t)
        d_f = 1.0 / np.sqrt(self.a * delta)
        d_w = n / (self.a ** 1.5 * delta ** 1.5)
        return d_f, d_w

    def _upper_delta(self, u):
        u2 = np.asarray(u, dtype=float) ** 2
        return u2 * self.d_tilde(u2, np.log1p(-u2))

    def lower_delta(self, t):
        t = np.asarray(t, dtype=float)
        return (self.omega * _om(self.beta, t)
                + self.A_p * np.exp(self.alpha * t) * _om(self.beta - self.alpha, t))

    def delta(self, tau):
        """W(a tau; omega) / (a tau)."""
        tau = np.asarray(tau, dtype=float)
        upper = tau >= 0.5
        u = np.sqrt(np.clip(1.0 - tau, 0.0, None))
        t = np.log(np.where(upper, 0.5, np.maximum(tau, np.finfo(float).tiny)))
        return np.where(upper, self._upper_delta(u), self.lower_delta(t))

    # -- table --------------------------------------------------------------

    def _segment_quad(self, rates, lo, hi, index, what):
        return adaptive_quad(lambda v: float(rates(v)[index]), lo, hi,
                             epsabs=self.quad_tol * 1e-2, epsrel=self.quad_tol, what=what)

    def _ensure_upper(self):
        if self._upper_nodes is not None:
            return
        with self._lock:
            if self._upper_nodes is not None:
                return
            nodes = np.linspace(0.0, U_SPLIT, UPPER_SEGMENTS + 1)
            z = np.zeros_like(nodes)
            w = np.zeros_like(nodes)
            for k in range(UPPER_SEGMENTS):
                z[k + 1] = z[k] + self._segment_quad(self._upper_rates, nodes[k], nodes[k + 1], 0, "F segment")
                w[k + 1] = w[k] + self._segment_quad(self._upper_rates, nodes[k], nodes[k + 1], 1,
                                                     "F_omega segment")
            self._lower_nodes = [T_SPLIT]
            self._lower_z = [z[-1]]
            self._lower_w = [w[-1]]
            self._upper_z, self._upper_w = z, w
            self._upper_nodes = nodes

    def _lower_table(self, z_needed):
        """Extend the lower chart past z_needed (or to T_FLOOR); returns array copies."""
        self._ensure_upper()
        with self._lock:
            added = 0
            while self._lower_z[-1] <= z_needed and not self._lower_exhausted:
                t_hi = self._lower_nodes[-1]
                t_lo = t_hi - LOWER_STEP
                if t_lo < T_FLOOR:
                    self._lower_exhausted = True
                    break
                self._lower_z.append(self._lower_z[-1] + self._segment_quad(
                    self._lower_rates, t_lo, t_hi, 0, "F segment"))
                self._lower_w.append(self._lower_w[-1] + self._segment_quad(
                    self._lower_rates, t_lo, t_hi, 1, "F_omega segment"))
                self._lower_nodes.append(t_lo)
                added += 1
            if added:
                logger.info("%r: lower table extended by %d segments to tau=%.3e (z=%.6g)",
                            self, added, math.exp(self._lower_nodes[-1]), self._lower_z[-1])
            return (np.array(self._lower_nodes), np.array(self._lower_z), np.array(self._lower_w))

    # -- inversion ----------------------------------------------------------

    @staticmethod
    def _gl_partial(rates, index, v0, v):
        half = 0.5 * (v - v0)
        mid = 0.5 * (v + v0)
        pts = mid[:, None] + half[:, None] * _GL_NODES[None, :]
        return half * (rates(pts)[index] @ _GL_WEIGHTS)

    def _newton(self, rates, orient, v0, v1, z0, z1, target):
        """Solve z0 + orient * int_{v0}^{v} rate = target for v between v0 and v1.

        z is monotone in v (increasing when orient > 0); Newton steps leaving
        the current bracket are replaced by bisection.
        """
        lo = np.minimum(v0, v1)
        hi = np.maximum(v0, v1)
        width = np.where(z1 != z0, z1 - z0, 1.0)
        v = v0 + np.clip((target - z0) / width, 0.0, 1.0) * (v1 - v0)
        tol = np.maximum(self.inv_tol, 4.0 * np.finfo(float).eps * np.abs(v))
        done = target == z0
        v = np.where(done, v0, v)
        for _ in range(60):
            if done.all():
                break
            r = z0 + orient * self._gl_partial(rates, 0, v0, v) - target
            too_far = orient * r > 0
            hi = np.where(too_far & ~done, v, hi)
            lo = np.where(~too_far & ~done, v, lo)
            v_new = v - r / (orient * rates(v)[0])
            outside = ~np.isfinite(v_new) | (v_new < lo) | (v_new > hi)
            v_new = np.where(outside, 0.5 * (lo + hi), v_new)
            v_new = np.where(done, v, v_new)
            done = done | (np.abs(v_new - v) <= tol) | (r == 0)
            v = v_new
        if not done.all():
            v = self._brent_remaining(rates, orient, v0, v1, z0, target, v, done)
        return v

    def _brent_remaining(self, rates, orient, v0, v1, z0, target, v, done):
        v = v.copy()
        for i in np.flatnonzero(~done):
            def resid(x, i=i):
                return float(z0[i] + orient * self._gl_partial(rates, 0, v0[i:i + 1], np.array([x]))[0]
                             - target[i])
            try:
                v[i] = optimize.brentq(resid, min(v0[i], v1[i]), max(v0[i], v1[i]),
                                       xtol=self.inv_tol, rtol=4 * np.finfo(float).eps)
            except ValueError as exc:
                raise RootBracketError(
                    f"inversion of F failed at z={target[i]}: {exc}",
                    diagnostics={'z': float(target[i]), 'segment': (float(v0[i]), float(v1[i]))},
                ) from exc
        logger.debug("%r: %d inversions finished by brentq", self, int((~done).sum()))
        return v

    def locate(self, z):
        """Chart, chart coordinate and raw F_omega integral at G(z), as arrays."""
        z = np.atleast_1d(np.asarray(z, dtype=float))
        if np.any(z < 0) or not np.all(np.isfinite(z)):
            raise PreconditionError("z must be finite and nonnegative")
        self._ensure_upper()
        chart = np.full(z.shape, UPPER)
        var = np.zeros(z.shape)
        raw = np.zeros(z.shape)

        up = z <= self._upper_z[-1]
        if up.any():
            zu = z[up]
            k = np.clip(np.searchsorted(self._upper_z, zu, side='right') - 1, 0, UPPER_SEGMENTS - 1)
            v0, v1 = self._upper_nodes[k], self._upper_nodes[k + 1]
            u = self._newton(self._upper_rates, 1.0, v0, v1, self._upper_z[k], self._upper_z[k + 1], zu)
            var[up] = u
            raw[up] = self._upper_w[k] + self._gl_partial(self._upper_rates, 1, v0, u)

        low = ~up
        if low.any():
            zl = z[low]
            nodes, lower_z, lower_w = self._lower_table(float(zl.max()))
            beyond = zl >= lower_z[-1]
            t = np.zeros(zl.shape)
            w = np.zeros(zl.shape)
            inside = ~beyond
            if inside.any():
                j = np.clip(np.searchsorted(lower_z, zl[inside], side='right') - 1, 0, len(lower_z) - 2)
                v0 = nodes[j]
                t_in = self._newton(self._lower_rates, -1.0, v0, nodes[j + 1], lower_z[j], lower_z[j + 1],
                                    zl[inside])
                t[inside] = t_in
                w[inside] = lower_w[j] - self._gl_partial(self._lower_rates, 1, v0, t_in)
            chart[low] = np.where(beyond, UNDERFLOW, LOWER)
            var[low] = t
            raw[low] = w
        return chart, var, raw

    def _tau_delta(self, chart, var):
        is_up = chart == UPPER
        is_low = chart == LOWER
        tau = np.where(is_up, 1.0 - var * var, np.where(is_low, np.exp(np.where(is_low, var, 0.0)), 0.0))
        delta = np.where(is_up, self._upper_delta(np.where(is_up, var, 0.0)),
                         np.where(is_low, self.lower_delta(np.where(is_low, var, T_SPLIT)), 0.0))
        return tau, delta

    # -- F and G -----------------------------------------------------------

    def F_eval(self, tau):
        if not 0.0 < tau <= 1.0:
            raise PreconditionError(f"F needs 0 < tau <= 1 (tau={tau})")
        return self._chart_integral(tau, 0)

    def F_tau(self, tau):
        if not 0.0 < tau < 1.0:
            raise PreconditionError(f"F_tau needs 0 < tau < 1 (tau={tau})")
        return float(-1.0 / (tau * np.sqrt(self.a * self.delta(tau))))

    def F_omega(self, tau):
        if not 0.0 < tau <= 1.0:
            raise PreconditionError(f"F_omega needs 0 < tau <= 1 (tau={tau})")
        return self.c_omega * self._chart_integral(tau, 1)

    def _chart_integral(self, tau, index):
        if tau == 1.0:
            return 0.0
        if tau >= 0.5:
            return self._segment_quad(self._upper_rates, 0.0, math.sqrt(1.0 - tau), index, "F(tau)")
        self._ensure_upper()
        head = self._upper_z[-1] if index == 0 else self._upper_w[-1]
        return head + self._segment_quad(self._lower_rates, math.log(tau), T_SPLIT, index, "F(tau)")

    def G_array(self, z):
        chart, var, _ = self.locate(z)
        return self._tau_delta(chart, var)[0]

    def G_derivatives(self, z):
        """(G, G_z, G_omega) at z, with G_z = -G sqrt(a Delta(G)) and G_omega = -F_omega(G) G_z."""
        chart, var, raw = self.locate(z)
        tau, delta = self._tau_delta(chart, var)
        g_z = -tau * np.sqrt(self.a * delta)
        g_omega = -self.c_omega * np.where(chart == UNDERFLOW, 0.0, raw) * g_z
        return tau, g_z, g_omega

    def G_eval(self, z):
        return float(self.G_array(z)[0])

    def G_z(self, z):
        return float(self.G_derivatives(z)[1][0])

    def G_omega(self, z):
        return float(self.G_derivatives(z)[2][0])

    # -- profile ------------------------------------------------------------

    def _tail_constant(self):
        if self._tail is None:
            x_switch = self.F_eval(self.tail_tau) / self.b
            exponent = -1.0 / self.alpha
            phi_switch = math.sqrt(self.a * self.tail_tau)
            self._tail = (x_switch, phi_switch / x_switch ** exponent, exponent)
            logger.info("%r: algebraic tail beyond x=%.6g", self, x_switch)
        return self._tail

    def in_asymptotic_tail(self, x):
        """True where phi_0 is taken from its fitted x^(-2/(p-1)) tail."""
        x = np.asarray(x, dtype=float)
        if self.omega > 0:
            return np.zeros(x.shape, dtype=bool)
        return np.abs(x) > self._tail_constant()[0]

    def phi_and_prime(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        ax = np.abs(x)
        tail = self.in_asymptotic_tail(ax)
        phi = np.zeros(ax.shape)
        dphi = np.zeros(ax.shape)
        direct = ~tail
        if direct.any():
            chart, var, _ = self.locate(self.b * ax[direct])
            tau, delta = self._tau_delta(chart, var)
            phi[direct] = np.sqrt(self.a * tau)
            # phi' = -sqrt(W(phi^2)) = -sqrt(a tau Delta)
            dphi[direct] = -np.sqrt(self.a * tau * delta)
        if tail.any():
            _, c, k = self._tail_constant()
            phi[tail] = c * ax[tail] ** k
            dphi[tail] = k * phi[tail] / ax[tail]
            logger.debug("%r: %d points in the algebraic tail", self, int(tail.sum()))
        return phi, np.where(x < 0, -dphi, dphi)

    def phi_array(self, x):
        return self.phi_and_prime(x)[0]

    def phi_prime_array(self, x):
        return self.phi_and_prime(x)[1]

    def phi(self, x):
        return float(self.phi_array(x)[0])

    def phi_prime(self, x):
        return float(self.phi_prime_array(x)[0])

    # -- integrals over x ---------------------------------------------------

    def x_chart_integral(self, g):
        """int_0^inf g(tau, Delta) dx, tau = phi(x)^2 / a, through dx = dtau / (b tau sqrt(a Delta))."""
        def upper(u):
            u2 = u * u
            d_tilde = float(self.d_tilde(u2, math.log1p(-u2)))
            tau = 1.0 - u2
            return 2.0 * g(tau, u2 * d_tilde) / (tau * math.sqrt(self.a * d_tilde))

        def lower(t):
            tau = math.exp(t)
            delta = float(self.lower_delta(t))
            if tau == 0.0 or delta <= 0.0:
                return 0.0
            return g(tau, delta) / math.sqrt(self.a * delta)

        head = adaptive_quad(upper, 0.0, U_SPLIT, epsabs=self.quad_tol, epsrel=self.quad_tol,
                             what="x-integral (upper chart)")
        tail = adaptive_quad(lower, -np.inf, T_SPLIT, epsabs=self.quad_tol, epsrel=self.quad_tol,
                             what="x-integral (lower chart)")
        return (head + tail) / self.b

    def x_integral(self, h):
        """int_0^inf h(phi(x)^2) dx."""
        return self.x_chart_integral(lambda tau, delta: h(self.a * tau))


@functools.lru_cache(maxsize=64)
def get_evaluator(params, omega=0.0, quad_tol=1e-13, inv_tol=1e-14, tail_tau=1e-14):
    """Shared evaluator per (params, omega, tolerances); its table is reused across callers."""
    return ProfileEvaluator(params, omega, quad_tol=quad_tol, inv_tol=inv_tol, tail_tau=tail_tau)


def phi_closed_form(x, omega, params):
    """Elementary profile for q = 2p - 1."""
    if not params.has_closed_form:
        raise PreconditionError(f"closed form needs q = 2p - 1 (p={params.p}, q={params.q})")
    if omega < 0:
        raise PreconditionError(f"omega must be nonnegative (omega={omega})")
    p = params.p
    x = np.asarray(x, dtype=float)
    if omega == 0:
        return (2.0 * (p + 1.0) / ((p + 1.0) ** 2 / p + (p - 1.0) ** 2 * x * x)) ** (1.0 / (p - 1.0))
    c = (p + 1.0) ** 2 / p * omega
    root = math.sqrt(1.0 + c)
    y = (p - 1.0) * math.sqrt(omega) * np.abs(x)
    near = y < 30.0
    y_near = np.where(near, y, 0.0)
    # sqrt(1+c) cosh y - 1, written without cancellation
    denom = c / (root + 1.0) * np.cosh(y_near) + 2.0 * np.sinh(0.5 * y_near) ** 2
    log_denom = np.where(near, np.log(np.where(near, denom, 1.0)), math.log(0.5 * root) + y)
    return np.exp((math.log((p + 1.0) * omega) - log_denom) / (p - 1.0))


def decay_exponent_phi(ev, x_start=100.0, samples=64):
    """Fitted log-log slope of phi_0 over [x_start, 4 x_start].

    Only inverted values enter the fit: when the window reaches the
    algebraic-tail switch of ev, a sibling evaluator with a smaller tail_tau
    moves the switch to twice the window end. A d / x term is fitted with the
    slope so the shift in phi_0 ~ C (x + x0)^k does not bias it.
    """
    if ev.omega != 0:
        raise PreconditionError("the decay exponent is defined for the omega = 0 profile only")
    hi = 4.0 * x_start
    x_switch = ev._tail_constant()[0]
    if hi >= x_switch:
        # tau = phi^2 / a falls like x^(-2 / alpha)
        tail_tau = ev.tail_tau * (x_switch / (2.0 * hi)) ** (2.0 / ev.alpha)
        if not tail_tau > TAU_FIT_FLOOR:
            raise PreconditionError(f"decay fit window [{x_start:.6g}, {hi:.6g}] is beyond direct inversion")
        logger.info("%r: tail switch at x=%.6g lies inside the fit window; fitting with tail_tau=%.3e",
                    ev, x_switch, tail_tau)
        ev = get_evaluator(ev.params, 0.0, quad_tol=ev.quad_tol, inv_tol=ev.inv_tol, tail_tau=tail_tau)
    xs = np.geomspace(x_start, hi, samples)
    slope, _ = loglog_fit(xs, ev.phi_array(xs), first_order=True)
    return slope
