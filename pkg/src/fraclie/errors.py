"""Exception hierarchy shared by all fraclie modules."""


class FracLieError(Exception):
    """Base class for every error raised by this package."""


class DomainError(FracLieError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class GridRangeError(FracLieError, IndexError):
    """A node index lies outside its grid."""


class GridSizeError(FracLieError, ValueError):
    """A grid has too few nodes for the requested stencil."""


class ConvergenceError(FracLieError, ArithmeticError):
    """A series or refinement study failed to converge."""


class UnsupportedConventionError(FracLieError, ValueError):
    """The power-rule convention was requested on an expression it cannot handle."""


class ParseError(FracLieError, ValueError):
    """An expression string does not conform to the canonical grammar."""


class BlowUpError(FracLieError, ArithmeticError):
    """A characteristic trajectory produced non-finite state."""


class DegenerateScalingError(DomainError):
    """A scaling problem with a zero coefficient."""


class UnreachableError(FracLieError):
    """A characteristic cannot be followed back to the initial line."""


class ClosureError(FracLieError):
    """A Lie bracket does not decompose in the chosen basis."""

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class ConstraintError(FracLieError, ValueError):
    """A source term violates the diffusion constraint."""


class OffShellError(FracLieError, ValueError):
    """An expression passed as a solution does not solve the equation."""


class SamplingError(FracLieError, ValueError):
    """A sampled function produced non-finite values."""


class SuiteFailure(FracLieError):
    """One or more asserted checks of a verification suite failed."""

    def __init__(self, failures, reports=()):
        super().__init__("; ".join(failures))
        self.failures = list(failures)
        self.reports = list(reports)
