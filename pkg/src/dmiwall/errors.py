"""Exception taxonomy shared across the package.

PreconditionError maps to CLI exit code 2 (bad config / violated contract),
NumericalError to exit code 3 (a solver failed at runtime).
"""


class PreconditionError(ValueError):
    """Input violates a documented precondition."""


class NumericalError(RuntimeError):
    """An iterative or time-stepping procedure failed to converge."""
