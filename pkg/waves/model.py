"""
Exponents, scalar functions and the stability classification of the
stationary state for

    i u_t = -u_xx + |u|^{p-1} u - |u|^{q-1} u,    x in R.

Everything here is a pure function of its arguments.
"""
import enum
import functools
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .exceptions import PreconditionError, RootBracketError

logger = logging.getLogger(__name__)

# floats within this distance of 2p+q = 7 are classified as the boundary case
BOUNDARY_TOL = 1e-12
P_CRITICAL = 7.0 / 3.0


class StabilityTag(str, enum.Enum):
    MASS_DERIV_POSITIVE = "MassDerivPositive"
    MASS_DERIV_ZERO = "MassDerivZero"
    MASS_DERIV_NEGATIVE_FINITE = "MassDerivNegativeFinite"
    MASS_DERIV_MINUS_INFINITY = "MassDerivMinusInfinity"


UNSTABLE_TAGS = (StabilityTag.MASS_DERIV_NEGATIVE_FINITE, StabilityTag.MASS_DERIV_MINUS_INFINITY)


@dataclass(frozen=True)
class ModelParams:
    p: float
    q: float

    def __post_init__(self):
        p, q = float(self.p), float(self.q)
        if not (math.isfinite(p) and math.isfinite(q)):
            raise PreconditionError(f"exponents must be finite (p={self.p}, q={self.q})")
        if not 1.0 < p < q:
            raise PreconditionError(f"need 1 < p < q (p={p}, q={q})")
        object.__setattr__(self, 'p', p)
        object.__setattr__(self, 'q', q)

    @property
    def alpha(self):
        return 0.5 * (self.p - 1.0)

    @property
    def beta(self):
        return 0.5 * (self.q - 1.0)

    @property
    def characteristic_length(self):
        """Half-width scale of the q = 2p-1 stationary profile."""
        return math.sqrt((self.p + 1.0) ** 2 / self.p) / (self.p - 1.0)

    @property
    def has_closed_form(self):
        return abs(self.q - (2.0 * self.p - 1.0)) < BOUNDARY_TOL

    def require_subcritical(self):
        if not self.q < 5.0:
            raise PreconditionError(f"need q < 5 for the instability analysis (q={self.q})")

    def require_l2_stationary(self):
        if not self.p < 5.0:
            raise PreconditionError(f"phi_0 is not square integrable for p >= 5 (p={self.p})")


@dataclass(frozen=True)
class StabilityClass:
    tag: StabilityTag
    two_p_plus_q: float
    gamma1_threshold: float

    @property
    def is_unstable_branch(self):
        return self.tag in UNSTABLE_TAGS


def _check_s(s):
    if np.any(np.asarray(s) < 0):
        raise PreconditionError(f"s must be nonnegative (s={s})")


def f_eval(s, params):
    _check_s(s)
    return np.power(s, params.alpha) - np.power(s, params.beta)


def w_eval(s, omega, params):
    _check_s(s)
    p, q = params.p, params.q
    return (omega * s
            + 2.0 / (p + 1.0) * np.power(s, 0.5 * (p + 1.0))
            - 2.0 / (q + 1.0) * np.power(s, 0.5 * (q + 1.0)))


def w_s_eval(s, omega, params):
    return omega + f_eval(s, params)


def a_zero(params):
    p, q = params.p, params.q
    return ((q + 1.0) / (p + 1.0)) ** (2.0 / (q - p))


@functools.lru_cache(maxsize=4096)
def _a_positive(omega, p, q):
    params = ModelParams(p, q)
    a0 = a_zero(params)
    lo, hi = a0, 2.0 * a0
    doublings = 0
    while w_eval(hi, omega, params) >= 0.0:
        lo, hi = hi, 2.0 * hi
        doublings += 1
        if doublings > 200:
            raise RootBracketError(
                f"could not bracket a(omega) for omega={omega}",
                diagnostics={'p': p, 'q': q, 'omega': omega, 'a0': a0, 'last_hi': hi},
            )
    try:
        root = optimize.brentq(w_eval, lo, hi, args=(omega, params),
                               xtol=1e-13 * a0, rtol=4 * np.finfo(float).eps, maxiter=500)
    except (ValueError, RuntimeError) as exc:
        raise RootBracketError(
            f"a(omega) root find failed for omega={omega}: {exc}",
            diagnostics={'p': p, 'q': q, 'omega': omega, 'bracket': (lo, hi)},
        ) from exc
    return root


def a_omega(omega, params):
    """The positive zero a(omega) of W(.; omega); equals phi_omega(0)^2."""
    if omega < 0:
        raise PreconditionError(f"omega must be nonnegative (omega={omega})")
    if omega == 0:
        return a_zero(params)
    return _a_positive(float(omega), params.p, params.q)


def a_prime(omega, params):
    a = a_omega(omega, params)
    return -a / w_s_eval(a, omega, params)


def b_omega(omega, params):
    return 2.0 / math.sqrt(a_omega(omega, params))


def b_prime(omega, params):
    return -a_prime(omega, params) * a_omega(omega, params) ** -1.5


def gamma1(p):
    return (23.0 - 3.0 * p) / (3.0 + p)


def gamma_d(p, d=1):
    """Scaling threshold in dimension d; reported only (1-D analysis here)."""
    denom = d * (d + 2.0 - (d - 2.0) * p)
    return (16.0 + d * d + 6.0 * d - p * d * (d + 2.0)) / denom


def classify(params):
    two_p_plus_q = 2.0 * params.p + params.q
    if abs(two_p_plus_q - 7.0) <= BOUNDARY_TOL:
        tag = StabilityTag.MASS_DERIV_ZERO
    elif two_p_plus_q < 7.0:
        tag = StabilityTag.MASS_DERIV_POSITIVE
    elif params.p < P_CRITICAL:
        tag = StabilityTag.MASS_DERIV_NEGATIVE_FINITE
    else:
        tag = StabilityTag.MASS_DERIV_MINUS_INFINITY
    return StabilityClass(tag=tag, two_p_plus_q=two_p_plus_q, gamma1_threshold=gamma1(params.p))


def satisfies_virial_condition(params):
    return params.q > gamma1(params.p) + BOUNDARY_TOL


def satisfies_mass_condition(params):
    return 2.0 * params.p + params.q > 7.0 + BOUNDARY_TOL


def in_gap_region(params):
    """Mass condition holds while the scaling (virial) condition does not."""
    return satisfies_mass_condition(params) and not satisfies_virial_condition(params)


def describe_conditions(params):
    g1 = gamma1(params.p)
    notes = []
    if abs(params.q - g1) <= BOUNDARY_TOL:
        notes.append("virial condition q > gamma1(p) violated: q is on the boundary")
    elif params.q > g1:
        notes.append("virial condition q > gamma1(p) satisfied")
    else:
        notes.append("virial condition q > gamma1(p) violated")
    if satisfies_mass_condition(params):
        notes.append("mass condition 2p+q > 7 satisfied")
    else:
        notes.append("mass condition 2p+q > 7 violated")
    if in_gap_region(params):
        if abs(params.q - g1) <= BOUNDARY_TOL:
            notes.append("gap region boundary")
        else:
            notes.append("gap region")
    return notes
