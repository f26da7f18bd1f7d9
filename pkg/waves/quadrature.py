"""
Numerical plumbing shared by the profile, eta, mass and unstable modules:
an error-checked front end to QUADPACK's adaptive Gauss-Kronrod rule and a
least-squares power-law fit.
"""
import logging

import numpy as np
from scipy import integrate

from .exceptions import QuadratureError

logger = logging.getLogger(__name__)

DEFAULT_LIMIT = 200

# QUADPACK flags results it could not certify (roundoff, subdivision limit).
# Those are accepted when the reported error is still within SLACK tolerances.
SLACK = 1e4


def _worst_interval(info):
    try:
        last = int(info['last'])
        elist = np.asarray(info['elist'][:last])
        i = int(np.argmax(elist))
        return (float(info['alist'][i]), float(info['blist'][i]), float(elist[i]))
    except (KeyError, ValueError, IndexError):
        return None


def adaptive_quad(fn, lo, hi, epsabs=1e-13, epsrel=1e-13, points=None,
                  limit=DEFAULT_LIMIT, what="integral"):
    """Integrate fn over [lo, hi] (infinite limits allowed).

    Raises QuadratureError with the worst subinterval when QUADPACK cannot
    get within SLACK times the requested tolerance.
    """
    if lo == hi:
        return 0.0
    kwargs = {'epsabs': epsabs, 'epsrel': epsrel, 'limit': limit, 'full_output': 1}
    if points is not None and np.isfinite(lo) and np.isfinite(hi):
        inside = [pt for pt in points if min(lo, hi) < pt < max(lo, hi)]
        if inside:
            kwargs['points'] = inside
    result = integrate.quad(fn, lo, hi, **kwargs)
    value, abserr, info = result[0], result[1], result[2]
    if len(result) > 3:
        bound = SLACK * max(epsabs, epsrel * abs(value))
        if not np.isfinite(value) or abserr > bound:
            worst = _worst_interval(info)
            raise QuadratureError(
                f"{what} on [{lo}, {hi}] did not converge ({result[3]}); "
                f"abserr={abserr:.3e}, worst subinterval={worst}",
                worst_interval=worst,
                abserr=abserr,
            )
        logger.debug("%s on [%s, %s] accepted with abserr=%.3e", what, lo, hi, abserr)
    return float(value)


def geometric_breakpoints(lo, hi, first=1.0, ratio=2.0):
    """Points first, first*ratio, ... strictly inside (lo, hi)."""
    pts = []
    x = first
    while x < hi:
        if x > lo:
            pts.append(x)
        x *= ratio
    return pts


def loglog_fit(xs, ys, first_order=False):
    """Least-squares fit of log|y| = k log x + c; returns (k, c).

    With first_order, a d / x term is fitted alongside, which absorbs the
    shift in y ~ C (x - x0)^k.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.abs(np.asarray(ys, dtype=float))
    if not first_order:
        k, c = np.polyfit(np.log(xs), np.log(ys), 1)
        return float(k), float(c)
    design = np.column_stack([np.log(xs), np.ones_like(xs), 1.0 / xs])
    (k, c, _), *_ = np.linalg.lstsq(design, np.log(ys), rcond=None)
    return float(k), float(c)


def richardson_limit(estimates):
    """Limit of three estimates at cuts X, 2X, 4X whose error behaves like C X^-s.

    The rate 2^s is measured from the two differences. When they are at the
    noise level or not contracting, the last estimate is returned as is.
    """
    i1, i2, i3 = (float(v) for v in estimates)
    d1, d2 = i1 - i2, i2 - i3
    if d2 == 0.0 or d1 * d2 <= 0.0:
        return i3
    ratio = d1 / d2
    if ratio <= 1.5:
        return i3
    return i3 - d2 / (ratio - 1.0)
