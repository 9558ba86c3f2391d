"""Exception types raised by the library."""


class PredualPoissonError(Exception):
    """Base class for all library errors."""


class DimensionError(PredualPoissonError, ValueError):
    pass


class RoleError(PredualPoissonError, ValueError):
    pass


class ValidationError(PredualPoissonError, ValueError):
    """Model data failed a structural check on load (e.g. non-skew constants)."""


class PreconditionError(PredualPoissonError, ValueError):
    pass


class FamilyError(PredualPoissonError, ValueError):
    """A truncation family is not coherent across dimensions."""


class NotLinearError(PredualPoissonError, ValueError):
    pass


class OracleInconsistencyError(PredualPoissonError, ValueError):
    pass


class BlowupError(PredualPoissonError, ArithmeticError):
    def __init__(self, step: int, message: str = ""):
        self.step = step
        super().__init__(message or f"non-finite state at step {step}")
