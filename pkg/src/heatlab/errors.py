"""Exception hierarchy for heatlab."""


class HeatlabError(Exception):
    """Base class for all heatlab errors."""


class DomainError(HeatlabError, ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class RangeError(HeatlabError, ValueError):
    """An argument lies outside the supported numerical range."""


class UnsupportedSpace(HeatlabError, TypeError):
    """The operation is not available for this kind of model space."""


class HypothesisViolated(HeatlabError):
    """A structural hypothesis (e.g. constant heat-kernel diagonal) fails."""


class BudgetExceeded(HeatlabError):
    """A series could not reach the requested tolerance within its budget.

    The best certificate obtained so far is kept on ``certificate``.
    """

    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class CalibrationFailed(HeatlabError):
    """Root bracketing found no sign change; ``scan`` holds the table."""

    def __init__(self, message, scan=None):
        super().__init__(message)
        self.scan = scan or []
