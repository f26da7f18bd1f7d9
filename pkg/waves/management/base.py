import logging

from django.core.management.base import BaseCommand, CommandError

from waves.exceptions import WaveLabError
from waves.output import emit, render_csv, render_json
from waves.runconfig import FORMATS, RunConfig

VERBOSITY_LEVELS = {0: logging.ERROR, 1: logging.WARNING, 2: logging.INFO, 3: logging.DEBUG}


class WaveCommand(BaseCommand):
    """Common flags, config resolution and error mapping for the waves commands."""

    default_format = 'csv'
    schema = None
    # knob flags this command exposes besides --quad-tol
    knob_flags = ()

    def add_arguments(self, parser):
        parser.add_argument('--p', type=float, required=True, help='lower power p (1 < p < q)')
        parser.add_argument('--q', type=float, required=True, help='upper power q')
        parser.add_argument('--out', help='output file (default: stdout)')
        parser.add_argument('--format', choices=FORMATS, help=f'output format (default: {self.default_format})')
        parser.add_argument('--quad-tol', type=float, help='quadrature tolerance')
        parser.add_argument('--config', help='key=value file overriding settings.WAVELAB')
        parser.add_argument('--seedless', nargs='?', const=True, default=None,
                            help='accepted for compatibility; every computation is deterministic')
        for flag, kwargs in self.knob_flags:
            parser.add_argument(flag, **kwargs)
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def handle(self, *args, **options):
        logging.getLogger('waves').setLevel(VERBOSITY_LEVELS.get(options.get('verbosity', 1), logging.DEBUG))
        try:
            config = RunConfig.resolve(options, default_format=self.default_format)
            self.run(config, options)
        except WaveLabError as exc:
            raise CommandError(exc.one_line(), returncode=exc.exit_code)

    def run(self, config, options):
        raise NotImplementedError

    def write_table(self, config, header, rows, extra=None):
        if config.format == 'csv':
            text = render_csv(header, rows)
        else:
            payload = {'p': config.p, 'q': config.q, 'columns': list(header), 'rows': [list(r) for r in rows]}
            payload.update(extra or {})
            text = render_json(payload, self.schema or 'table')
        self.finish(config, text)

    def write_json(self, config, payload):
        self.finish(config, render_json(payload, self.schema))

    def finish(self, config, text):
        emit(text, config.out, self.stdout, command=self.command_name, config=config)
        if config.out:
            self.stdout.write(self.style.SUCCESS(f"Wrote {config.out}"))

    @property
    def command_name(self):
        return self.__module__.rsplit('.', 1)[-1]
