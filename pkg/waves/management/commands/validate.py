from django.core.management.base import CommandError

from waves.exceptions import EXIT_NUMERICAL
from waves.management.base import WaveCommand
from waves.output import render_csv
from waves.validation import SUITES, run_suites

CHECK_COLUMNS = ('suite', 'name', 'passed', 'residual', 'tolerance', 'detail')


class Command(WaveCommand):
    help = "Run the cross-check suites for (p, q) and report residuals with pass/fail."

    default_format = 'json'
    schema = 'validate'
    knob_flags = (
        ('--pairing-tail-lengths', {'type': float}),
    )

    def add_command_arguments(self, parser):
        parser.add_argument('--suite', action='append', choices=[s.name for s in SUITES],
                            help='run only the named suite (repeatable)')

    def run(self, config, options):
        suites = SUITES
        if options.get('suite'):
            suites = tuple(s for s in SUITES if s.name in options['suite'])
        report = run_suites(config, suites)
        if config.format == 'json':
            self.write_json(config, report)
        else:
            rows = [[check[c] for c in CHECK_COLUMNS] for check in report['checks']]
            self.finish(config, render_csv(CHECK_COLUMNS, rows))
        failed = [f"{c['suite']}.{c['name']}" for c in report['checks'] if not c['passed']]
        if failed:
            raise CommandError(f"validation_failed: {', '.join(failed)}", returncode=EXIT_NUMERICAL)
        self.stderr.write(self.style.SUCCESS(f"All {len(report['checks'])} checks passed."))
