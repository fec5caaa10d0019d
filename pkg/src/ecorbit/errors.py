"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input violates a documented precondition (CLI exit code 2)."""


class SingularCurveError(ValidationError):
    def __init__(self, discriminant):
        super().__init__(f"singular curve: discriminant g2^3 - 27 g3^2 = {discriminant}")
        self.discriminant = discriminant


class PrecisionError(ArithmeticError):
    """A working-precision budget would be exceeded (CLI exit code 3)."""

    def __init__(self, message, required_bits=None):
        super().__init__(message)
        self.required_bits = required_bits


class AtInfinity(ArithmeticError):
    """Raised when a torus coordinate sits on the pole of the parameterization."""


class TorsionPointError(ValidationError):
    def __init__(self, order):
        super().__init__(f"point appears to be torsion of order {order}")
        self.order = order
