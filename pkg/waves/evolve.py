"""
Split-step spectral integration of

    i u_t = -u_xx + |u|^{p-1} u - |u|^{q-1} u

on the periodic box [-L, L), with energy, charge and the modulation distance
inf_theta ||u - e^{i theta} phi||_{H^1} tracked along the run.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft

from . import model
from .eta import EtaZero
from .exceptions import EvolutionBlowup, NotApplicable, PreconditionError
from .profile import get_evaluator
from .unstable import find_unstable_direction, make_cutoff, quadform_terms

logger = logging.getLogger(__name__)

# initial data are multiplied by chi_{L / WINDOW_DIVISOR}
WINDOW_DIVISOR = 2.5
TAIL_RATIO = 1e-6


@dataclass
class FieldState:
    values: np.ndarray
    half_width: float
    n: int
    t: float = 0.0
    dt: float = 1e-3
    history: list = field(default_factory=list)
    reference: np.ndarray = None
    # perturbation size applied by init_state
    lam: float = 0.0

    def __post_init__(self):
        if self.n <= 0 or self.n & (self.n - 1):
            raise PreconditionError(f"grid size must be a power of two (n={self.n})")
        if not (self.half_width > 0 and self.dt > 0):
            raise PreconditionError(f"need L > 0 and dt > 0 (L={self.half_width}, dt={self.dt})")
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.n,):
            raise PreconditionError(f"values must have shape ({self.n},)")

    @property
    def dx(self):
        return 2.0 * self.half_width / self.n

    @property
    def x(self):
        return grid(self.half_width, self.n)

    @property
    def k(self):
        return wavenumbers(self.half_width, self.n)

    def copy(self):
        return FieldState(self.values.copy(), self.half_width, self.n, self.t, self.dt,
                          list(self.history), self.reference, self.lam)


def grid(half_width, n):
    return -half_width + (2.0 * half_width / n) * np.arange(n)


def wavenumbers(half_width, n):
    return 2.0 * np.pi * fft.fftfreq(n, d=2.0 * half_width / n)


def derivative(values, half_width):
    n = len(values)
    return fft.ifft(1j * wavenumbers(half_width, n) * fft.fft(values))


def charge(state):
    """1/2 ||u||^2."""
    return 0.5 * state.dx * float(np.sum(np.abs(state.values) ** 2))


def energy(state, params):
    """1/2 ||u'||^2 + ||u||_{p+1}^{p+1} / (p+1) - ||u||_{q+1}^{q+1} / (q+1)."""
    p, q = params.p, params.q
    u_hat = fft.fft(state.values)
    grad_sq = state.dx / state.n * float(np.sum(np.abs(state.k * u_hat) ** 2))
    mod = np.abs(state.values)
    return (0.5 * grad_sq
            + state.dx * float(np.sum(mod ** (p + 1))) / (p + 1.0)
            - state.dx * float(np.sum(mod ** (q + 1))) / (q + 1.0))


def action(state, omega, params):
    """S_omega(u) = E(u) + omega * charge(u)."""
    return energy(state, params) + omega * charge(state)


def h1_inner(u, v, half_width):
    dx = 2.0 * half_width / len(u)
    du = derivative(u, half_width)
    dv = derivative(v, half_width)
    return dx * complex(np.sum(u * np.conj(v)) + np.sum(du * np.conj(dv)))


def h1_norm(u, half_width):
    return math.sqrt(max(h1_inner(u, u, half_width).real, 0.0))


def modulation_distance(state, reference=None):
    """inf over theta of ||u - e^{i theta} phi||_{H^1}; the minimizing phase is <u, phi> / |<u, phi>|."""
    reference = state.reference if reference is None else reference
    if reference is None or len(reference) != state.n:
        raise PreconditionError("reference profile must be sampled on the state grid")
    overlap = h1_inner(state.values, reference, state.half_width)
    phase = overlap / abs(overlap) if overlap != 0 else 1.0
    return h1_norm(state.values - phase * reference, state.half_width)


def sup_norm(state):
    return float(np.max(np.abs(state.values)))


def apply_gauge(state, angle):
    rotated = state.copy()
    rotated.values = np.exp(1j * angle) * state.values
    return rotated


def parity_defect(state):
    """max |u(x) - u(-x)| on the periodic grid."""
    mirrored = np.roll(state.values[::-1], 1)
    return float(np.max(np.abs(state.values - mirrored)))


def step(state, params, nonlinear=True):
    """One Strang step: half nonlinear phase, full linear step, half nonlinear phase."""
    p, q = params.p, params.q
    half = 0.5 * state.dt
    u = state.values
    if nonlinear:
        mod = np.abs(u)
        u = u * np.exp(-1j * half * (mod ** (p - 1) - mod ** (q - 1)))
    u = fft.ifft(np.exp(-1j * state.k ** 2 * state.dt) * fft.fft(u))
    if nonlinear:
        mod = np.abs(u)
        u = u * np.exp(-1j * half * (mod ** (p - 1) - mod ** (q - 1)))
    state.values = u
    state.t += state.dt
    return state


def _sample(state, params):
    row = (state.t, energy(state, params), charge(state),
           modulation_distance(state) if state.reference is not None else float('nan'), sup_norm(state))
    return row


def run(state, t_max, params, sample_every=100, nonlinear=True):
    """Advance state to t_max, appending (t, energy, charge, distance, sup_norm) every sample_every steps."""
    if sample_every <= 0:
        raise PreconditionError(f"sample_every must be positive (sample_every={sample_every})")
    steps = int(round((t_max - state.t) / state.dt))
    if steps < 0:
        raise PreconditionError(f"t_max={t_max} lies before the current time {state.t}")
    if not state.history:
        state.history.append(_sample(state, params))
    healthy = state.copy()
    report_every = max(1, steps // 10)
    for i in range(1, steps + 1):
        step(state, params, nonlinear=nonlinear)
        if i % sample_every == 0 or i == steps:
            if not np.all(np.isfinite(state.values)):
                raise EvolutionBlowup(f"non-finite field at t={state.t:.6g}", last_healthy=healthy)
            state.history.append(_sample(state, params))
            healthy = state.copy()
        if i % report_every == 0:
            logger.info("evolution %d/%d steps, t=%.4g", i, steps, state.t)
    return state


def default_half_width(params, box_lengths=100.0):
    return box_lengths * params.characteristic_length


def _window(x, half_width):
    return make_cutoff(half_width / WINDOW_DIVISOR).chi(x)


def _check_box(ev, half_width):
    phi_edge = ev.phi(half_width)
    phi_top = ev.phi(0.0)
    if phi_edge >= TAIL_RATIO * phi_top:
        logger.warning("box half-width L=%.6g is short of the tail: phi(L)/phi(0)=%.3e >= %g; "
                       "the periodic seam is smoothed by chi_{L/%g}", half_width, phi_edge / phi_top,
                       TAIL_RATIO, WINDOW_DIVISOR)


def unstable_direction_on_grid(params, R, x, direction=None, **tolerances):
    """(phi_0, psi_R) sampled at x; direction is a quadform report for R, computed when absent."""
    e = EtaZero(params, **tolerances)
    if direction is None:
        direction = quadform_terms(R, e)
    elif direction.R != R:
        raise PreconditionError(f"direction was computed at R={direction.R:.6g}, not R={R:.6g}")
    eta, phi = e.eta_and_phi(x)
    psi = phi + direction.beta_R * make_cutoff(R).chi(x) * eta
    return phi, psi, direction


def init_state(params, lam=None, R=None, half_width=None, n=2 ** 14, dt=1e-3, lambda_scale=1e-2,
               box_lengths=100.0, direction=None, **tolerances):
    """Sampled phi_0 + lam psi_R, windowed by chi_{L/2.5}; lam = 0 gives the stationary data.

    With lam=None the size is lambda_scale ||phi_0||_{H1} / ||psi_R||_{H1}; the
    value used is kept on the returned state.
    """
    params.require_subcritical()
    half_width = half_width or default_half_width(params, box_lengths)
    x = grid(half_width, n)
    window = _window(x, half_width)
    ev = get_evaluator(params, 0.0, **tolerances)
    _check_box(ev, half_width)
    phi = ev.phi_array(x)
    reference = window * phi
    if R is None:
        if lam not in (None, 0.0):
            raise PreconditionError("a perturbation needs the cutoff radius R")
        values = reference.astype(complex)
        return FieldState(values, half_width, n, dt=dt, reference=reference)
    if 2.0 * R > half_width / WINDOW_DIVISOR:
        raise PreconditionError(f"psi_R support 2R={2 * R:.6g} exceeds the window plateau "
                                f"L/{WINDOW_DIVISOR}={half_width / WINDOW_DIVISOR:.6g}; enlarge L")
    _, psi, _ = unstable_direction_on_grid(params, R, x, direction, **tolerances)
    psi = window * psi
    if lam is None:
        lam = lambda_scale * h1_norm(reference, half_width) / h1_norm(psi, half_width)
    values = (reference + lam * psi).astype(complex)
    state = FieldState(values, half_width, n, dt=dt, reference=reference, lam=float(lam))
    logger.info("initial data: lambda=%.6g R=%.6g L=%.6g n=%d", lam, R, half_width, n)
    return state


@dataclass
class ExitReport:
    exited: bool
    t_exit: float
    peak_distance: float
    initial_distance: float
    threshold: float
    lam: float
    history: list = field(default_factory=list)

    def summary(self):
        return {k: getattr(self, k) for k in
                ('exited', 't_exit', 'peak_distance', 'initial_distance', 'threshold', 'lam')}


def exit_report(state, lam, exit_factor):
    distances = [row[3] for row in state.history]
    initial = distances[0]
    threshold = exit_factor * initial
    t_exit = next((row[0] for row in state.history if row[3] > threshold), None)
    return ExitReport(exited=t_exit is not None, t_exit=t_exit, peak_distance=max(distances),
                      initial_distance=initial, threshold=threshold, lam=lam, history=list(state.history))


def experiment_schedule(half_width, params, r_schedule=(0.25, 0.5, 0.95)):
    """Cutoff radii in units of the characteristic length, fitted inside the window plateau."""
    r_max = half_width / (2.0 * WINDOW_DIVISOR)
    return tuple(f * r_max / params.characteristic_length for f in r_schedule)


def default_direction(params, half_width, **tolerances):
    """(R, report) for the first radius of the in-box schedule giving an unstable direction."""
    return find_unstable_direction(params, experiment_schedule(half_width, params), **tolerances)


def default_radius(params, half_width, **tolerances):
    return default_direction(params, half_width, **tolerances)[0]


def instability_experiment(params, lam=None, t_max=50.0, dt=1e-3, n=2 ** 14, half_width=None, box_lengths=100.0,
                           sample_every=100, exit_factor=10.0, lambda_scale=1e-2, **tolerances):
    """Evolve phi_0 +/- lam psi_R* and report exits from the exit_factor x initial-distance neighborhood."""
    stability = model.classify(params)
    if not stability.is_unstable_branch:
        raise NotApplicable(f"classification {stability.tag.value} at p={params.p}, q={params.q} "
                            "has no unstable direction to follow")
    half_width = half_width or default_half_width(params, box_lengths)
    R, direction = default_direction(params, half_width, **tolerances)
    if lam is None:
        lam = _default_lambda(params, R, half_width, n, lambda_scale, direction, **tolerances)
    reports = []
    for signed in (abs(lam), -abs(lam)):
        state = init_state(params, signed, R, half_width, n, dt, direction=direction, **tolerances)
        run(state, t_max, params, sample_every=sample_every)
        reports.append(exit_report(state, signed, exit_factor))
        logger.info("lambda=%+.3e: exited=%s t_exit=%s peak=%.3e", signed, reports[-1].exited,
                    reports[-1].t_exit, reports[-1].peak_distance)
    return R, reports


def _default_lambda(params, R, half_width, n, lambda_scale, direction=None, **tolerances):
    x = grid(half_width, n)
    window = _window(x, half_width)
    phi, psi, _ = unstable_direction_on_grid(params, R, x, direction, **tolerances)
    return lambda_scale * h1_norm(window * phi, half_width) / h1_norm(window * psi, half_width)


def standing_wave_experiment(params, omega, lam=1e-2, t_max=50.0, dt=1e-3, n=2 ** 14, half_width=None,
                             box_lengths=100.0, sample_every=100, exit_factor=10.0, **tolerances):
    """Contrast run from (1 + lam) phi_omega, omega > 0, measured against the orbit of phi_omega."""
    if not omega > 0:
        raise PreconditionError(f"standing-wave run needs omega > 0 (omega={omega})")
    params.require_subcritical()
    half_width = half_width or default_half_width(params, box_lengths)
    x = grid(half_width, n)
    ev = get_evaluator(params, omega, **tolerances)
    reference = _window(x, half_width) * ev.phi_array(x)
    state = FieldState(((1.0 + lam) * reference).astype(complex), half_width, n, dt=dt, reference=reference)
    run(state, t_max, params, sample_every=sample_every)
    return exit_report(state, lam, exit_factor)


def free_gaussian(x, t, width=1.0):
    """Exact solution of i u_t = -u_xx from exp(-x^2 / width^2)."""
    spread = width * width + 4j * t
    return width / np.sqrt(spread) * np.exp(-np.asarray(x) ** 2 / spread)
