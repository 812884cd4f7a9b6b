"""Exception types shared across the package."""


class InputError(ValueError):
    """Invalid user input: malformed tables, out-of-range parameters, bad profiles."""


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before reaching its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ContractViolation(RuntimeError):
    """An internal precondition or postcondition was found not to hold."""
