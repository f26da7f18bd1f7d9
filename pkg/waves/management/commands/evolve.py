from waves import evolve
from waves.exceptions import InconclusiveExperiment, PreconditionError
from waves.management.base import WaveCommand
from waves.output import render_csv

SERIES_COLUMNS = ('t', 'energy', 'charge', 'modulation_distance', 'sup_norm')


class Command(WaveCommand):
    help = "Split-step evolution from phi_0 + lambda psi_R, or from (1 + lambda) phi_omega with --omega."

    knob_flags = (
        ('--dt', {'type': float}),
        ('--n', {'type': int, 'help': 'grid size (power of two)'}),
        ('--t-max', {'type': float}),
        ('--sample-every', {'type': int}),
        ('--exit-factor', {'type': float}),
        ('--box-lengths', {'type': float}),
        ('--lambda-scale', {'type': float}),
    )

    def add_command_arguments(self, parser):
        parser.add_argument('--lambda', dest='lam', type=float,
                            help='perturbation size (default: lambda-scale relative H1 size)')
        parser.add_argument('--R', dest='radius', type=float, help='cutoff radius of psi_R')
        parser.add_argument('--L', dest='half_width', type=float, help='box half-width')
        parser.add_argument('--omega', type=float, default=0.0,
                            help='evolve the standing wave (1 + lambda) phi_omega instead (omega > 0)')
        parser.add_argument('--experiment', action='store_true',
                            help='run both signs of lambda and report exits (exit 4 if neither exits)')

    def run(self, config, options):
        params = config.params
        params.require_subcritical()
        half_width = options['half_width'] or evolve.default_half_width(params, config['box_lengths'])
        common = dict(t_max=config['t_max'], dt=config['dt'], n=config['n'], half_width=half_width,
                      sample_every=config['sample_every'], exit_factor=config['exit_factor'], **config.tolerances)
        omega, lam, radius = options['omega'], options['lam'], options['radius']

        if omega:
            if omega < 0:
                raise PreconditionError(f"omega must be nonnegative (omega={omega})")
            report = evolve.standing_wave_experiment(params, omega, 1e-2 if lam is None else lam, **common)
            runs = [report]
        elif options['experiment']:
            radius, runs = evolve.instability_experiment(params, lam, lambda_scale=config['lambda_scale'], **common)
        else:
            direction = None
            if lam != 0 and radius is None:
                radius, direction = evolve.default_direction(params, half_width, **config.tolerances)
            state = evolve.init_state(params, lam, radius if lam != 0 else None, half_width, config['n'],
                                      config['dt'], lambda_scale=config['lambda_scale'], direction=direction,
                                      **config.tolerances)
            evolve.run(state, config['t_max'], params, sample_every=config['sample_every'])
            runs = [evolve.exit_report(state, state.lam, config['exit_factor'])]

        if config.format == 'csv':
            if len(runs) == 1:
                text = render_csv(SERIES_COLUMNS, runs[0].history)
            else:
                rows = [(r.lam,) + tuple(row) for r in runs for row in r.history]
                text = render_csv(('lambda',) + SERIES_COLUMNS, rows)
            self.finish(config, text)
        else:
            self.schema = 'evolve'
            self.write_json(config, {
                'p': params.p, 'q': params.q, 'omega': omega, 'R': radius, 'half_width': half_width,
                'n': config['n'], 'dt': config['dt'], 'columns': list(SERIES_COLUMNS),
                'runs': [dict(r.summary(), rows=[list(row) for row in r.history]) for r in runs],
            })
        for r in runs:
            self.stderr.write(f"lambda={r.lam:+.3e} exited={r.exited} t_exit={r.t_exit} "
                              f"peak_distance={r.peak_distance:.6e}")
        if options['experiment'] and not any(r.exited for r in runs):
            raise InconclusiveExperiment(
                f"modulation distance stayed below {runs[0].threshold:.3e} up to t={config['t_max']}")
