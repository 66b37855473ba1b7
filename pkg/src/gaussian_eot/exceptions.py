"""Exception hierarchy shared by all modules."""


class GaussianOTError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(GaussianOTError, ValueError):
    """Input rejected before any numerical work was done."""


class DimensionError(ValidationError):
    pass


class SymmetryError(ValidationError):
    def __init__(self, max_asymmetry, tol):
        self.max_asymmetry = float(max_asymmetry)
        self.tol = float(tol)
        super().__init__(
            f"matrix is not symmetric: max |A - A^T| = {self.max_asymmetry:.3e} "
            f"exceeds tolerance {self.tol:.1e}"
        )


class DefinitenessError(ValidationError):
    def __init__(self, eigenvalue, largest):
        self.eigenvalue = float(eigenvalue)
        self.largest = float(largest)
        super().__init__(
            f"matrix is not positive definite: eigenvalue {self.eigenvalue:.6e} "
            f"is not above 1e-12 * largest eigenvalue ({self.largest:.6e})"
        )


class NumericalError(GaussianOTError, ArithmeticError):
    """A computed quantity violated an invariant it should satisfy exactly."""


class ConvergenceError(NumericalError):
    def __init__(self, message, residual=None, iterations=None):
        self.residual = residual
        self.iterations = iterations
        super().__init__(message)


class ResourceError(GaussianOTError):
    """Requested problem size exceeds the configured limits."""
