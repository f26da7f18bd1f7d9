from waves.eta import EtaZero, eta0_closed_form
from waves.management.base import WaveCommand
from waves.management.commands.profile import sample_grid


class Command(WaveCommand):
    help = "Tabulate eta_0 = d phi_omega / d omega at omega = 0 and its derivative."

    def add_command_arguments(self, parser):
        parser.add_argument('--xmax', type=float, default=10.0)
        parser.add_argument('--n', dest='points', type=int, default=201, help='number of grid points')

    def run(self, config, options):
        params = config.params
        xs = sample_grid(options['xmax'], options['points'])
        e = EtaZero(params, **config.tolerances)
        _, _, eta, deta = e.fields(xs)
        header = ['x', 'eta0', 'eta0_prime']
        columns = [xs, eta, deta]
        if params.has_closed_form:
            header.append('eta0_closed_form')
            columns.append(eta0_closed_form(xs, params))
        self.write_table(config, header, list(zip(*columns)))
