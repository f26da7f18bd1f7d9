"""
Frequency derivative of the profile, eta_omega = d phi_omega / d omega.

Differentiating phi_omega(x)^2 = a(omega) G(b(omega) x; omega) gives

    eta = (a' G + a b' |x| G_z + a G_omega) / (2 phi),

evaluated at z = b |x|. At omega = 0 this is the one-sided derivative eta_0,
which is not square integrable for p >= 7/3 and grows for p > 3.
"""
import functools
import logging

import numpy as np

from . import model
from .exceptions import PreconditionError, SignChangeInWindow
from .profile import get_evaluator
from .quadrature import loglog_fit

logger = logging.getLogger(__name__)


class EtaOmega:

    def __init__(self, params, omega=0.0, profile=None, quad_tol=1e-13, inv_tol=1e-14, tail_tau=1e-14):
        if profile is None:
            profile = get_evaluator(params, omega, quad_tol, inv_tol, tail_tau)
        elif profile.params != params or profile.omega != omega:
            raise PreconditionError("profile evaluator does not match (params, omega)")
        self.params = params
        self.omega = profile.omega
        self.profile = profile
        self.a = profile.a
        self.b = profile.b
        self.a_prime = model.a_prime(self.omega, params)
        self.b_prime = model.b_prime(self.omega, params)
        self._cached = functools.lru_cache(maxsize=1 << 16)(self._eta_scalar)

    def __repr__(self):
        return f"<{type(self).__name__} p={self.params.p} q={self.params.q} omega={self.omega}>"

    def _pieces(self, x):
        ax = np.abs(np.atleast_1d(np.asarray(x, dtype=float)))
        g, g_z, g_omega = self.profile.G_derivatives(self.b * ax)
        phi = np.sqrt(self.a * g)
        numer = self.a_prime * g + self.a * self.b_prime * ax * g_z + self.a * g_omega
        safe = np.where(phi > 0, phi, 1.0)
        eta = np.where(phi > 0, numer / (2.0 * safe), 0.0)
        eta = np.where(ax == 0, self.a_prime / (2.0 * np.sqrt(self.a)), eta)
        return eta, phi, g, g_z

    def eta_and_phi(self, x):
        """(eta, phi) on an array of x; phi from the direct (non-tail) path."""
        return self._pieces(x)[:2]

    def eta_array(self, x):
        return self.eta_and_phi(x)[0]

    def _eta_scalar(self, ax):
        return float(self.eta_array(ax)[0])

    def eta(self, x):
        return self._cached(abs(float(x)))

    def fields(self, x):
        """(phi, phi', eta, eta') on an array of x, all from one inversion.

        eta' = -(2 W_s(phi^2) phi eta + phi^2) / (2 sqrt(W(phi^2))) for x > 0, odd in x.
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        eta, phi, g, g_z = self._pieces(x)
        phi2 = phi * phi
        w_s = model.w_s_eval(phi2, self.omega, self.params)
        # sqrt(W(phi^2)) = -G_z / sqrt(G), free of cancellation near x = 0
        ok = (x != 0) & (g_z < 0)
        root = np.where(ok, -g_z, 1.0) / np.sqrt(np.where(ok, g, 1.0))
        value = np.where(ok, -(2.0 * w_s * phi * eta + phi2) / (2.0 * root), 0.0)
        sign = np.where(x < 0, -1.0, 1.0)
        dphi = np.where(ok, -root, 0.0)
        return phi, sign * dphi, eta, sign * value

    def eta_prime_array(self, x):
        return self.fields(x)[3]

    def eta_prime(self, x):
        return float(self.eta_prime_array(x)[0])


class EtaZero(EtaOmega):
    """eta_0 together with a(0), a'(0), b(0), b'(0)."""

    def __init__(self, params, profile=None, **tolerances):
        super().__init__(params, 0.0, profile=profile, **tolerances)

    @property
    def profile0(self):
        return self.profile

    @property
    def a0(self):
        return self.a

    @property
    def a0_prime(self):
        return self.a_prime

    @property
    def b0(self):
        return self.b

    @property
    def b0_prime(self):
        return self.b_prime

    def eta0(self, x):
        return self.eta(x)

    def eta0_prime(self, x):
        return self.eta_prime(x)


def eta0_closed_form(x, params):
    if not params.has_closed_form:
        raise PreconditionError(f"closed form needs q = 2p - 1 (p={params.p}, q={params.q})")
    p = params.p
    x2 = np.asarray(x, dtype=float) ** 2
    base = 2.0 * (p + 1.0) / ((p + 1.0) ** 2 / p + (p - 1.0) ** 2 * x2)
    poly = ((p + 1.0) ** 4 / (8.0 * p * p)
            - (p - 1.0) ** 2 * (p + 1.0) ** 2 / (4.0 * p) * x2
            - (p - 1.0) ** 4 / 24.0 * x2 * x2)
    return base ** (1.0 / (p - 1.0) + 1.0) * poly / ((p - 1.0) * (p + 1.0))


def eta_fd(x, omega, params, **tolerances):
    """(phi_omega(x) - phi_0(x)) / omega; a convergence diagnostic toward eta_0(x)."""
    if not omega > 0:
        raise PreconditionError(f"eta_fd needs omega > 0 (omega={omega})")
    ev_omega = get_evaluator(params, omega, **tolerances)
    ev_zero = get_evaluator(params, 0.0, **tolerances)
    return (ev_omega.phi_array(x) - ev_zero.phi_array(x)) / omega


def second_difference(fn, x, h):
    """Five-point central second derivative of a vectorized fn."""
    x = np.asarray(x, dtype=float)
    return (-fn(x + 2 * h) + 16.0 * fn(x + h) - 30.0 * fn(x) + 16.0 * fn(x - h) - fn(x - 2 * h)) / (12.0 * h * h)


def residual_linearized(x_grid, e, h=1e-3, eta_fn=None):
    """sup |L_omega eta + phi| over x_grid, with eta'' by central differences.

    L_omega = -d^2/dx^2 + omega + p phi^(p-1) - q phi^(q-1). eta_fn replaces
    eta (used to sanity-check the check itself).
    """
    x = np.asarray(x_grid, dtype=float)
    if x.size == 0 or np.any(np.abs(x) < h):
        raise PreconditionError(f"residual grid must avoid |x| < h (h={h})")
    eta_fn = eta_fn or e.eta_array
    p, q = e.params.p, e.params.q
    phi = e.profile.phi_array(x)
    eta = eta_fn(x)
    eta_xx = second_difference(eta_fn, x, h)
    residual = -eta_xx + e.omega * eta + p * phi ** (p - 1) * eta - q * phi ** (q - 1) * eta + phi
    return float(np.max(np.abs(residual)))


def decay_exponent_eta(e, x_start=100.0, samples=64):
    """Fitted exponent of |eta_0| over [x_start, 4 x_start] and the sign at 4 x_start."""
    xs = np.geomspace(x_start, 4.0 * x_start, samples)
    values = e.eta_array(xs)
    signs = np.sign(values)
    flips = np.flatnonzero(signs[1:] != signs[:-1])
    if flips.size:
        location = float(xs[flips[-1] + 1])
        raise SignChangeInWindow(f"eta_0 changes sign near x={location:.6g} inside the fit window",
                                 location=location)
    exponent, _ = loglog_fit(xs, values, first_order=True)
    return exponent, int(signs[-1])

