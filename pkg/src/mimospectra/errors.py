"""Exception hierarchy shared across the package.

Two failure families map onto the CLI exit codes: configuration problems
(exit 2) and numerical failures (exit 3).
"""


class ConfigError(ValueError):
    """Invalid scenario parameters, config files, or shape mismatches."""


class NumericalError(RuntimeError):
    """A solver could not produce a trustworthy value."""


class BranchTrackingError(NumericalError):
    """Root continuation lost the physical branch.

    Carries the candidate roots at the failure point so the caller can
    inspect what the tracker saw.
    """

    def __init__(self, message, roots=None):
        super().__init__(message)
        self.roots = list(roots) if roots is not None else []


class IterationError(NumericalError):
    """An iterative solve exhausted its budget; keeps the iterate trace."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace) if trace is not None else []
