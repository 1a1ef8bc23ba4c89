"""Exception hierarchy.

Every error carries an ``exit_code`` so the CLI can map failures without
a lookup table: 2 for configuration/usage, 3 for violated model
assumptions, 4 for numerical failures.
"""


class AgeHopfError(Exception):
    exit_code = 4


class ConfigError(AgeHopfError, ValueError):
    exit_code = 2


class SchemaError(ConfigError):
    pass


class ConfigSyntaxError(ConfigError):
    pass


class ParameterError(AgeHopfError, ValueError):
    exit_code = 2


class NonPositiveParameter(ParameterError):
    pass


class InconsistentGrowthRate(ParameterError):
    pass


class AssumptionViolation(AgeHopfError):
    exit_code = 3


class NoPositiveEquilibrium(AssumptionViolation):
    pass


class NoPositiveTheta(AssumptionViolation):
    pass


class AmbiguousTheta(AssumptionViolation):
    """Two positive roots of the frequency quadratic.

    ``candidates`` holds ``(omega, [tau_0, tau_1, ...])`` for each root so
    callers can still inspect both ladders.
    """

    def __init__(self, message, candidates=()):
        super().__init__(message)
        self.candidates = list(candidates)


class NumericalError(AgeHopfError, ArithmeticError):
    exit_code = 4


class CosineOutOfRange(NumericalError):
    pass


class OutsideOmega(NumericalError, ValueError):
    pass


class PoleAtLambda(NumericalError, ValueError):
    pass


class NoConvergence(NumericalError):
    pass


class ContourThroughRoot(NumericalError):
    pass


class QuadratureFailure(NumericalError):
    pass


class GridTooCoarse(NumericalError, ValueError):
    pass


class NegativeDensity(NumericalError):
    pass


class BlowUp(NumericalError):
    pass


class StepNotDividingDelay(NumericalError, ValueError):
    pass


class InsufficientData(NumericalError, ValueError):
    pass


class MismatchedSampling(NumericalError, ValueError):
    pass
