import numpy as np

from waves.exceptions import PreconditionError
from waves.management.base import WaveCommand
from waves.mass import mass, mass_prime, mass_prime_fd


class Command(WaveCommand):
    help = "Tabulate M(omega), M'(omega) and a finite-difference M'(omega) over a frequency range."

    knob_flags = (
        ('--near-critical-band', {'type': float}),
    )

    def add_command_arguments(self, parser):
        parser.add_argument('--omega-min', type=float, default=0.0)
        parser.add_argument('--omega-max', type=float, default=1.0)
        parser.add_argument('--n', dest='points', type=int, default=11, help='number of frequencies')

    def run(self, config, options):
        params = config.params
        lo, hi, points = options['omega_min'], options['omega_max'], options['points']
        if points is None or points < 1:
            raise PreconditionError(f"--n must be at least 1 (n={points})")
        if not 0 <= lo <= hi:
            raise PreconditionError(f"need 0 <= omega_min <= omega_max (got {lo}, {hi})")
        if lo == 0:
            params.require_l2_stationary()
        omegas = np.linspace(lo, hi, points) if points > 1 else np.array([lo])
        tol = config.tolerances
        rows = []
        for omega in omegas:
            omega = float(omega)
            derivative = mass_prime(omega, params, near_critical_band=config['near_critical_band'], **tol)
            fd = mass_prime_fd(omega, min(1e-4, 0.1 * omega), params, **tol) if omega > 0 else None
            rows.append((omega, mass(omega, params, **tol), derivative, fd))
        self.write_table(config, ('omega', 'mass', 'mass_prime', 'mass_prime_fd'), rows)
