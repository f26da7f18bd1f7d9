"""
Error hierarchy for the waves app.

Each exception carries the CLI exit code it maps to, so management commands
can turn any library failure into a single-line CommandError.
"""

EXIT_PRECONDITION = 2
EXIT_NUMERICAL = 3
EXIT_INCONCLUSIVE = 4


class WaveLabError(Exception):
    kind = "error"
    exit_code = EXIT_NUMERICAL

    def one_line(self):
        text = " ".join(str(self).split())
        return f"{self.kind}: {text}"


class PreconditionError(WaveLabError, ValueError):
    kind = "precondition_violation"
    exit_code = EXIT_PRECONDITION


class NotApplicable(WaveLabError):
    kind = "not_applicable"
    exit_code = EXIT_PRECONDITION


class NumericalFailure(WaveLabError):
    kind = "numerical_failure"


class QuadratureError(NumericalFailure):
    kind = "quadrature_failure"

    def __init__(self, message, worst_interval=None, abserr=None):
        super().__init__(message)
        self.worst_interval = worst_interval
        self.abserr = abserr


class RootBracketError(NumericalFailure):
    kind = "root_bracketing_failure"

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class IllConditionedBeta(NumericalFailure):
    kind = "ill_conditioned_beta"

    def __init__(self, message, denominator):
        super().__init__(message)
        self.denominator = denominator


class SignChangeInWindow(NumericalFailure):
    kind = "sign_change_in_window"

    def __init__(self, message, location):
        super().__init__(message)
        self.location = location


class EvolutionBlowup(NumericalFailure):
    kind = "evolution_blowup"

    def __init__(self, message, last_healthy=None):
        super().__init__(message)
        self.last_healthy = last_healthy


class ScheduleExhausted(NumericalFailure):
    kind = "schedule_exhausted"

    def __init__(self, message, reports=()):
        super().__init__(message)
        self.reports = list(reports)


class InconclusiveExperiment(WaveLabError):
    kind = "inconclusive"
    exit_code = EXIT_INCONCLUSIVE
