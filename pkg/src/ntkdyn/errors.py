"""Exception types shared across the package.

The CLI maps these onto process exit codes: ContractViolationError -> 1,
FormatError -> 2, DivergedRunError -> 3.
"""


class ContractViolationError(ValueError):
    """An argument or state violated a documented precondition."""


class FormatError(ValueError):
    """A file on disk does not match its declared format or schema."""


class DivergedRunError(RuntimeError):
    """Training hit a non-finite loss.

    Carries the partial trace recorded up to (not including) the offending
    step, so callers can serialize what was measured before the blow-up.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
