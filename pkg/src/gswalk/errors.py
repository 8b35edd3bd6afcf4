"""Exception types shared across the package."""


class InputError(ValueError):
    """Raised when caller-supplied data violates a documented precondition."""


class InfeasibleError(ArithmeticError):
    """Raised when a linear system has no solution within tolerance."""


class NumericalError(RuntimeError):
    """Raised when an internal invariant breaks because of floating-point trouble."""
