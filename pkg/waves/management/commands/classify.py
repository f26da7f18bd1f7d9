from waves import model
from waves.management.base import WaveCommand
from waves.output import render_csv


class Command(WaveCommand):
    help = "Classify (p, q) by the sign of the mass derivative at omega = 0."

    default_format = 'json'
    schema = 'classify'

    def run(self, config, options):
        params = config.params
        stability = model.classify(params)
        payload = {
            'p': params.p,
            'q': params.q,
            'class': stability.tag.value,
            'two_p_plus_q': stability.two_p_plus_q,
            'gamma1': stability.gamma1_threshold,
            'gamma_d': {f'd{d}': _gamma_or_nan(params.p, d) for d in (1, 2, 3)},
            'in_gap_region': model.in_gap_region(params),
            'virial_condition': model.satisfies_virial_condition(params),
            'mass_condition': model.satisfies_mass_condition(params),
            'notes': model.describe_conditions(params),
        }
        if config.format == 'json':
            self.write_json(config, payload)
        else:
            header = ('p', 'q', 'class', 'two_p_plus_q', 'gamma1', 'notes')
            row = (params.p, params.q, payload['class'], payload['two_p_plus_q'], payload['gamma1'],
                   '; '.join(payload['notes']))
            self.finish(config, render_csv(header, [row]))


def _gamma_or_nan(p, d):
    try:
        return model.gamma_d(p, d)
    except ZeroDivisionError:
        return float('nan')
