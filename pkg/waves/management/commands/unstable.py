from django.core.management.base import CommandError

from waves import model
from waves.exceptions import EXIT_NUMERICAL, NotApplicable
from waves.management.base import WaveCommand
from waves.mass import mass_prime, profile_norms
from waves.output import render_csv
from waves.profile import get_evaluator
from waves.unstable import band_decay_rates, convergence_table, expected_band_rates, quadform_phi0

REPORT_COLUMNS = ('R', 'R_units', 'beta_R', 'term_phi0', 'cross_term', 'square_term', 'total',
                  'predicted_limit', 'orthogonality_defect', 'band_phi', 'band_eta')


class Command(WaveCommand):
    help = "Convergence table of the quadratic form along psi_R = phi_0 + beta_R chi_R eta_0."

    default_format = 'json'
    schema = 'unstable'
    knob_flags = (
        ('--cond-tol', {'type': float}),
        ('--orthogonality-tol', {'type': float}),
    )

    def add_command_arguments(self, parser):
        parser.add_argument('--R', dest='r_schedule', nargs='+', type=float,
                            help='cutoff radii in units of the characteristic length')

    def run(self, config, options):
        params = config.params
        stability = model.classify(params)
        schedule = list(config['r_schedule'])
        payload = {'p': params.p, 'q': params.q, 'class': stability.tag.value, 'schedule': schedule,
                   'characteristic_length': params.characteristic_length}
        if not stability.is_unstable_branch:
            payload.update(status='not_applicable',
                           reason=f"classification {stability.tag.value} gives no unstable direction")
            self.write_json(config, payload)
            raise NotApplicable(payload['reason'])

        params.require_subcritical()
        tol = config.tolerances
        reports = convergence_table(params, schedule, cond_tol=config['cond_tol'], **tol)
        l2_sq = profile_norms(get_evaluator(params, 0.0, **tol))['l2_sq']
        found = next((r for r in reports
                      if r.total < 0 and r.orthogonality_defect < config['orthogonality_tol'] * l2_sq), None)
        payload.update(
            status='ok' if found else 'schedule_exhausted',
            mass_prime_0=mass_prime(0.0, params, near_critical_band=config['near_critical_band'], **tol),
            quadform_phi0=quadform_phi0(params, **tol),
            predicted_limit=reports[0].predicted_limit if reports else None,
            band_rates=band_decay_rates(reports) if len(reports) >= 2 else None,
            expected_band_rates=expected_band_rates(params),
            unstable_direction=found.as_dict() if found else None,
            reports=[r.as_dict() for r in reports],
        )
        if config.format == 'json':
            self.write_json(config, payload)
        else:
            rows = [[getattr(r, c) for c in REPORT_COLUMNS] for r in reports]
            self.finish(config, render_csv(REPORT_COLUMNS, rows))
        if not found:
            raise CommandError(f"schedule_exhausted: no R in {schedule} gave a negative quadratic form",
                               returncode=EXIT_NUMERICAL)
