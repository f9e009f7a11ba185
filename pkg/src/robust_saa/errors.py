"""Exception hierarchy shared by every module."""


class RobustSAAError(Exception):
    """Base class for errors raised by this package."""


class DomainError(RobustSAAError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class BoundInapplicableError(RobustSAAError, ValueError):
    """The hypotheses of a bound are not met for the given inputs."""


class NoClosedFormError(RobustSAAError, NotImplementedError):
    """No exact Wasserstein distance is available for a pair of distributions."""


class BudgetViolationError(RobustSAAError, ValueError):
    """A distribution sequence breaks its declared variation budget."""


class EmptyUncertaintySetError(RobustSAAError, ValueError):
    """A norm ball around a sample does not meet the support set."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class SchemaError(RobustSAAError, ValueError):
    """A JSON document does not match the documented schema."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
