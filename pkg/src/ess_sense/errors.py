"""Exception hierarchy.

Two branches matter for the CLI exit-code contract: :class:`InputError`
covers anything wrong with what the user handed us (exit code 2), while
:class:`ComputationError` covers failures that arise from the numbers
themselves (exit code 1).
"""


class EssSenseError(Exception):
    """Base class for all errors raised by this package."""


class InputError(EssSenseError):
    """Malformed or unusable input (files, flags, graph descriptions)."""


class ComputationError(EssSenseError):
    """A computation could not be carried out on otherwise valid input."""


class ParseError(InputError):
    """A data file or graph description could not be parsed."""


class MissingDataError(InputError):
    """A record contains an empty token or the missing-value marker."""


class DegenerateVariableError(InputError):
    """A column holds fewer than two distinct values."""


class TableTooLargeError(ComputationError):
    """A dense contingency table would exceed the configured cell cap."""


class DomainError(ComputationError):
    """A numeric argument is outside the valid domain."""


class EmptyDataError(ComputationError):
    """An operation that needs at least one record got none."""


class NonRepresentableError(ComputationError):
    """A requested empirical distribution has no exact integer-count form."""


class NormalizationError(ComputationError):
    """A probability table does not sum to one."""


class SizeError(ComputationError):
    """A problem instance is too large for the requested algorithm."""


class DegenerateDenominatorError(ComputationError):
    """The optimal-ESS denominator vanishes (data indistinguishable from
    the uniform prior), so the estimate diverges.

    When raised from the coordinate-ascent driver, the ``trace`` attribute
    carries the rounds completed before the failure.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
