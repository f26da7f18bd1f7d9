"""
Cutoff unstable direction psi_R = phi_0 + beta_R chi_R eta_0 and the
decomposition of its quadratic form

    <L0 psi, psi> = <L0 phi, phi> + 2 beta <L0(chi eta), phi> + beta^2 <L0(chi eta), chi eta>,

with L0(chi eta) = -chi'' eta - 2 chi' eta' - chi phi. Every integrand is even,
so integrals run over [0, 2R] (split at R) and are doubled.
"""
import functools
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import model
from .eta import EtaOmega, EtaZero
from .exceptions import IllConditionedBeta, NotApplicable, PreconditionError, ScheduleExhausted
from .mass import is_minus_infinity, mass_prime, profile_norms
from .profile import get_evaluator
from .quadrature import adaptive_quad, geometric_breakpoints, loglog_fit

logger = logging.getLogger(__name__)

DEFAULT_R_SCHEDULE = (50.0, 100.0, 200.0, 400.0, 800.0)


def _sigma(t):
    """exp(-1/t) for t > 0, else 0, with its first two derivatives."""
    t = np.asarray(t, dtype=float)
    pos = t > 0
    ts = np.where(pos, t, 1.0)
    s = np.where(pos, np.exp(-1.0 / ts), 0.0)
    d1 = np.where(pos, s / ts ** 2, 0.0)
    d2 = np.where(pos, s * (1.0 / ts ** 4 - 2.0 / ts ** 3), 0.0)
    return s, d1, d2


def _chi_unit(y):
    """chi and its y-derivatives at y = |x| >= 0."""
    a, a1, a2 = _sigma(2.0 - y)
    b, b1, b2 = _sigma(y - 1.0)
    a1 = -a1
    total = a + b
    cross = a1 * b - a * b1
    chi = a / total
    chi1 = cross / total ** 2
    chi2 = (a2 * b - a * b2) / total ** 2 - 2.0 * cross * (a1 + b1) / total ** 3
    return chi, chi1, chi2


@dataclass(frozen=True)
class CutoffProfile:
    """chi_R(x) = chi(x / R): 1 on |x| <= R, 0 on |x| >= 2R."""

    R: float

    def __post_init__(self):
        if not (self.R > 0 and math.isfinite(self.R)):
            raise PreconditionError(f"cutoff radius must be positive (R={self.R})")

    def all(self, x):
        x = np.asarray(x, dtype=float)
        chi, chi1, chi2 = _chi_unit(np.abs(x) / self.R)
        return chi, np.sign(x) * chi1 / self.R, chi2 / self.R ** 2

    def chi(self, x):
        return self.all(x)[0]

    def chi_prime(self, x):
        return self.all(x)[1]

    def chi_double_prime(self, x):
        return self.all(x)[2]


def make_cutoff(R):
    return CutoffProfile(float(R))


@dataclass
class UnstableDirectionReport:
    R: float
    beta_R: float
    term_phi0: float
    cross_term: float
    square_term: float
    total: float
    predicted_limit: object
    orthogonality_defect: float
    band_phi: float = 0.0
    band_eta: float = 0.0
    R_units: float = None

    def as_dict(self):
        return asdict(self)


def quadform_phi0_forms(params, **tolerances):
    """Three equal expressions of <L0 phi_0, phi_0>."""
    params.require_l2_stationary()
    p, q = params.p, params.q
    n = profile_norms(get_evaluator(params, 0.0, **tolerances))
    return {
        'gradient_form': -(p - 1.0) * n['grad_sq'] - (q - p) * n['lq1'],
        'direct_form': n['grad_sq'] + p * n['lp1'] - q * n['lq1'],
        'equation_form': (p - 1.0) * n['lp1'] - (q - 1.0) * n['lq1'],
    }


def quadform_phi0(params, **tolerances):
    return quadform_phi0_forms(params, **tolerances)['gradient_form']


class _Integrals:
    """Memoized pointwise fields of phi_0, eta_0 and chi_R for the half-line quadratures."""

    def __init__(self, e, cutoff, tol):
        self.e = e
        self.cutoff = cutoff
        self.tol = tol
        self._fields = functools.lru_cache(maxsize=1 << 14)(self._fields_at)

    def _fields_at(self, x):
        phi, dphi, eta, deta = (float(v[0]) for v in self.e.fields(x))
        chi, chi1, chi2 = (float(v) for v in self.cutoff.all(x))
        return phi, dphi, eta, deta, chi, chi1, chi2

    def over(self, fn, lo, hi, what, points=None):
        return 2.0 * adaptive_quad(lambda x: fn(*self._fields(float(x))), lo, hi,
                                   epsabs=self.tol, epsrel=self.tol, points=points, what=what)

    def bulk(self, fn, what):
        R = self.cutoff.R
        inner = self.over(fn, 0.0, R, what, points=geometric_breakpoints(0.0, R))
        return inner + self.over(fn, R, 2.0 * R, what)


def beta_R(R, e, cond_tol=1e-6, l2_sq=None):
    """beta_R = -||phi_0||^2 / (phi_0, chi_R eta_0), with the denominator."""
    l2_sq = l2_sq if l2_sq is not None else 2.0 * e.profile.x_integral(lambda v: v)
    ints = _Integrals(e, make_cutoff(R), e.profile.quad_tol)
    return _beta(ints, l2_sq, cond_tol)


def _beta(ints, l2_sq, cond_tol):
    denominator = ints.bulk(lambda phi, dphi, eta, deta, chi, chi1, chi2: chi * phi * eta,
                            "(phi_0, chi_R eta_0)")
    if abs(denominator) < cond_tol * l2_sq:
        raise IllConditionedBeta(
            f"(phi_0, chi_R eta_0) = {denominator:.3e} is below {cond_tol:g} ||phi_0||^2 at R={ints.cutoff.R:.6g}",
            denominator=denominator,
        )
    return -l2_sq / denominator, denominator


def predicted_limit(params, term_phi0, l2_sq, m_prime):
    """<L0 phi, phi> + ||phi||^4 / M'(0) for p < 7/3, <L0 phi, phi> for p >= 7/3."""
    if is_minus_infinity(m_prime):
        return term_phi0
    if m_prime == 0:
        return None
    return term_phi0 + l2_sq ** 2 / m_prime


def quadform_terms(R, e, cond_tol=1e-6, m_prime=None, norms=None):
    """Quadratic-form decomposition of psi_R; raises IllConditionedBeta."""
    params = e.params
    p, q = params.p, params.q
    norms = norms or profile_norms(e.profile)
    l2_sq = norms['l2_sq']
    term_phi0 = -(p - 1.0) * norms['grad_sq'] - (q - p) * norms['lq1']
    if m_prime is None:
        m_prime = mass_prime(0.0, params, quad_tol=e.profile.quad_tol)

    cutoff = make_cutoff(R)
    ints = _Integrals(e, cutoff, e.profile.quad_tol)
    beta, denominator = _beta(ints, l2_sq, cond_tol)

    two_r = 2.0 * R
    # band integrals, supported on R <= |x| <= 2R
    b_chi2_eta_phi = ints.over(lambda phi, dphi, eta, deta, chi, c1, c2: c2 * eta * phi, R, two_r, "chi'' eta phi")
    b_chi1_deta_phi = ints.over(lambda phi, dphi, eta, deta, chi, c1, c2: c1 * deta * phi, R, two_r,
                                "chi' eta' phi")
    b_chi_chi2_eta2 = ints.over(lambda phi, dphi, eta, deta, chi, c1, c2: chi * c2 * eta * eta, R, two_r,
                                "chi chi'' eta^2")
    b_chi_chi1_eta_deta = ints.over(lambda phi, dphi, eta, deta, chi, c1, c2: chi * c1 * eta * deta, R, two_r,
                                    "chi chi' eta eta'")
    bulk_chi_phi2 = ints.bulk(lambda phi, dphi, eta, deta, chi, c1, c2: chi * phi * phi, "chi phi^2")
    bulk_chi2_phi_eta = ints.bulk(lambda phi, dphi, eta, deta, chi, c1, c2: chi * chi * phi * eta,
                                  "chi^2 phi eta")

    l0_chi_eta_phi = -b_chi2_eta_phi - 2.0 * b_chi1_deta_phi - bulk_chi_phi2
    l0_chi_eta_chi_eta = -b_chi_chi2_eta2 - 2.0 * b_chi_chi1_eta_deta - bulk_chi2_phi_eta

    cross_term = 2.0 * beta * l0_chi_eta_phi
    square_term = beta * beta * l0_chi_eta_chi_eta
    total = term_phi0 + cross_term + square_term
    report = UnstableDirectionReport(
        R=R,
        beta_R=beta,
        term_phi0=term_phi0,
        cross_term=cross_term,
        square_term=square_term,
        total=total,
        predicted_limit=predicted_limit(params, term_phi0, l2_sq, m_prime),
        orthogonality_defect=abs(l2_sq + beta * denominator),
        band_phi=abs(b_chi2_eta_phi) + abs(b_chi1_deta_phi),
        band_eta=abs(b_chi_chi2_eta2) + abs(b_chi_chi1_eta_deta),
        R_units=R / params.characteristic_length,
    )
    logger.info("R=%.6g: beta=%.6g total=%.10g predicted=%s", R, beta, total, report.predicted_limit)
    return report


def convergence_table(params, r_schedule=DEFAULT_R_SCHEDULE, cond_tol=1e-6, **tolerances):
    """Reports for every R in r_schedule (units of the characteristic length).

    Ill-conditioned radii are skipped; a non-monotone approach to the
    predicted limit is logged.
    """
    params.require_l2_stationary()
    e = EtaZero(params, **tolerances)
    norms = profile_norms(e.profile)
    m_prime = mass_prime(0.0, params, **tolerances)
    ell = params.characteristic_length
    reports = []
    for units in r_schedule:
        try:
            reports.append(quadform_terms(units * ell, e, cond_tol=cond_tol, m_prime=m_prime, norms=norms))
        except IllConditionedBeta as exc:
            logger.warning("skipping R=%s lengths: %s", units, exc)
    gaps = [abs(r.total - r.predicted_limit) for r in reports if r.predicted_limit is not None]
    if any(later > earlier for earlier, later in zip(gaps, gaps[1:])):
        logger.warning("p=%s q=%s: |total - predicted limit| is not monotone over the schedule: %s",
                       params.p, params.q, ["%.3e" % g for g in gaps])
    return reports


def band_decay_rates(reports):
    """Fitted log-log slopes of the two band magnitudes against R."""
    rs = [r.R for r in reports]
    return {
        'band_phi': loglog_fit(rs, [r.band_phi for r in reports])[0],
        'band_eta': loglog_fit(rs, [r.band_eta for r in reports])[0],
    }


def expected_band_rates(params):
    k = -4.0 / (params.p - 1.0)
    return {'band_phi': k + 1.0, 'band_eta': k + 3.0}


def find_unstable_direction(params, r_schedule=DEFAULT_R_SCHEDULE, cond_tol=1e-6, orthogonality_tol=1e-8,
                            **tolerances):
    """First R in the schedule with <L0 psi_R, psi_R> < 0 and (psi_R, phi_0) ~ 0."""
    stability = model.classify(params)
    if not stability.is_unstable_branch:
        raise NotApplicable(f"classification {stability.tag.value} at p={params.p}, q={params.q} "
                            "gives no unstable direction")
    params.require_subcritical()
    e = EtaZero(params, **tolerances)
    norms = profile_norms(e.profile)
    m_prime = mass_prime(0.0, params, **tolerances)
    ell = params.characteristic_length
    reports = []
    for units in r_schedule:
        R = units * ell
        try:
            report = quadform_terms(R, e, cond_tol=cond_tol, m_prime=m_prime, norms=norms)
        except IllConditionedBeta as exc:
            logger.info("R=%s lengths skipped: %s", units, exc)
            continue
        reports.append(report)
        if report.total < 0 and report.orthogonality_defect < orthogonality_tol * norms['l2_sq']:
            return R, report
    raise ScheduleExhausted(
        f"no R in {list(r_schedule)} (units of {ell:.6g}) gave a negative quadratic form", reports=reports)


def psi_values(x, e, cutoff, beta):
    """psi_R = phi_0 + beta chi_R eta_0 on an array of x."""
    eta, phi = e.eta_and_phi(x)
    return phi + beta * cutoff.chi(x) * eta


def direct_quadform(R, e, beta, h=1e-3):
    """<L0 psi_R, psi_R> by quadrature with finite-difference psi''.

    Beyond 2R psi_R = phi_0 and L0 phi_0 = (p-1) phi^p - (q-1) phi^q.
    """
    p, q = e.params.p, e.params.q
    cutoff = make_cutoff(R)
    tol = max(e.profile.quad_tol, 1e-11)

    def inner(x):
        stencil = x + h * np.arange(-2.0, 3.0)
        eta, phis = e.eta_and_phi(stencil)
        values = phis + beta * cutoff.chi(stencil) * eta
        psi_xx = (-values[0] + 16.0 * values[1] - 30.0 * values[2] + 16.0 * values[3] - values[4]) / (12.0 * h * h)
        phi = phis[2]
        v = values[2]
        return (-psi_xx + p * phi ** (p - 1) * v - q * phi ** (q - 1) * v) * v

    two_r = 2.0 * R
    head = adaptive_quad(inner, 0.0, two_r, epsabs=tol, epsrel=tol,
                         points=geometric_breakpoints(0.0, two_r) + [R], what="direct <L0 psi, psi>")

    def tail_density(v):
        return (p - 1.0) * v ** (0.5 * (p + 1.0)) - (q - 1.0) * v ** (0.5 * (q + 1.0))

    whole = e.profile.x_integral(tail_density)
    near = adaptive_quad(lambda x: tail_density(e.eta_and_phi(x)[1][0] ** 2), 0.0, two_r, epsabs=tol, epsrel=tol,
                         points=geometric_breakpoints(0.0, two_r), what="phi_0 equation form on [0, 2R]")
    return 2.0 * (head + whole - near)


@dataclass
class PositiveFrequencyReport:
    omega: float
    mass_prime: float
    l2_sq: float
    quadform_phi: float
    quadform_psi_quadrature: float
    quadform_psi_closed: float
    orthogonality_defect: float
    extras: dict = field(default_factory=dict)


def positive_frequency_direction(params, omega, **tolerances):
    """psi_omega = phi_omega - ||phi_omega||^2 / M'(omega) eta_omega and both sides of its quadratic-form identity."""
    if not omega > 0:
        raise PreconditionError(f"positive-frequency direction needs omega > 0 (omega={omega})")
    p, q = params.p, params.q
    e = EtaOmega(params, omega, **tolerances)
    ev = e.profile
    norms = profile_norms(ev)
    l2_sq = norms['l2_sq']
    m_prime = mass_prime(omega, params, **tolerances)
    if m_prime == 0:
        raise PreconditionError(f"M'(omega) vanishes at omega={omega}")
    quadform_phi = (p - 1.0) * norms['lp1'] - (q - 1.0) * norms['lq1']
    tol = max(ev.quad_tol, 1e-11)

    def half_line(fn, what):
        def integrand(x):
            phi, dphi, eta, deta = (float(v[0]) for v in e.fields(x))
            return fn(phi, dphi, eta, deta)
        return 2.0 * adaptive_quad(integrand, 0.0, np.inf, epsabs=tol, epsrel=tol, what=what)

    def potential(phi):
        return omega + p * phi ** (p - 1) - q * phi ** (q - 1)

    eta_phi = half_line(lambda phi, dphi, eta, deta: eta * phi, "(eta, phi)")
    l_eta_phi = half_line(lambda phi, dphi, eta, deta: deta * dphi + potential(phi) * eta * phi, "<L eta, phi>")
    l_eta_eta = half_line(lambda phi, dphi, eta, deta: deta * deta + potential(phi) * eta * eta, "<L eta, eta>")
    c = l2_sq / m_prime
    return PositiveFrequencyReport(
        omega=omega,
        mass_prime=m_prime,
        l2_sq=l2_sq,
        quadform_phi=quadform_phi,
        quadform_psi_quadrature=quadform_phi - 2.0 * c * l_eta_phi + c * c * l_eta_eta,
        quadform_psi_closed=quadform_phi + l2_sq ** 2 / m_prime,
        orthogonality_defect=abs(l2_sq - c * eta_phi),
        extras={'eta_phi': eta_phi, 'l_eta_phi': l_eta_phi, 'l_eta_eta': l_eta_eta},
    )

