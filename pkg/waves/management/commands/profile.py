import numpy as np

from waves.exceptions import PreconditionError
from waves.management.base import WaveCommand
from waves.profile import get_evaluator, phi_closed_form


def sample_grid(xmax, points):
    if points is None or points < 2:
        raise PreconditionError(f"--n must be at least 2 (n={points})")
    if not xmax > 0:
        raise PreconditionError(f"--xmax must be positive (xmax={xmax})")
    return np.linspace(-xmax, xmax, points)


class Command(WaveCommand):
    help = "Tabulate phi_omega and phi_omega' on a symmetric grid."

    def add_command_arguments(self, parser):
        parser.add_argument('--omega', type=float, default=0.0)
        parser.add_argument('--xmax', type=float, default=10.0)
        parser.add_argument('--n', dest='points', type=int, default=201, help='number of grid points')

    def run(self, config, options):
        params = config.params
        omega = options['omega']
        if omega < 0:
            raise PreconditionError(f"omega must be nonnegative (omega={omega})")
        xs = sample_grid(options['xmax'], options['points'])
        ev = get_evaluator(params, omega, **config.tolerances)
        phi, dphi = ev.phi_and_prime(xs)
        header = ['x', 'phi', 'phi_prime']
        columns = [xs, phi, dphi]
        if params.has_closed_form:
            header.append('phi_closed_form')
            columns.append(phi_closed_form(xs, omega, params))
        self.write_table(config, header, list(zip(*columns)), extra={'omega': omega})
