"""Exception hierarchy shared by all modules.

Every error carries an ``exit_code`` so the command-line runner can map
failures onto its documented status codes without a lookup table.
"""


class MultiHardyError(Exception):
    """Base class; configuration-level problems map to exit code 2."""

    exit_code = 2


class ConfigInvalid(MultiHardyError):
    """An experiment configuration failed validation.

    Parameters
    ----------
    path : str
        Dotted path of the offending field, e.g. ``"domain.radius"``.
    message : str
        Human readable reason.
    """

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class DimensionMismatch(MultiHardyError):
    pass


class MixedPlacement(MultiHardyError):
    pass


class DuplicatePole(MultiHardyError):
    pass


class DimensionRestriction(MultiHardyError):
    pass


class EvaluationAtPole(MultiHardyError):
    pass


class EmptyRegion(MultiHardyError):
    pass


class UnsupportedDomain(MultiHardyError):
    pass


class NotAttained(MultiHardyError):
    pass


class EpsTooLarge(MultiHardyError):
    pass


class NonpositiveField(MultiHardyError):
    pass


class NonIntegrable(MultiHardyError):
    pass


class ZeroDenominator(MultiHardyError):
    pass


class DegenerateImportanceDensity(MultiHardyError):
    pass


class GridTooCoarse(MultiHardyError):
    pass


class InconclusiveTrend(MultiHardyError):
    pass


class BudgetExceeded(MultiHardyError):
    """Adaptive quadrature hit its cell budget before reaching tolerance."""

    exit_code = 3


class NoConvergence(MultiHardyError):
    """An iterative eigensolver exhausted its iteration budget."""

    exit_code = 3


class InequalityViolation(MultiHardyError):
    """A proven inequality was numerically violated beyond error bars."""

    exit_code = 4
