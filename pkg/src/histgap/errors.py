"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: validation problems exit with 2,
resource problems with 3 and eigensolver failures with 4.
"""


class HistgapError(Exception):
    """Base class for every error raised by the package."""


class ValidationError(HistgapError, ValueError):
    """Inputs violate a documented precondition or invariant."""


class DimensionError(ValidationError):
    pass


class HermiticityError(ValidationError):
    def __init__(self, index, deviation):
        self.index = index
        self.deviation = deviation
        super().__init__(f"term {index} is not Hermitian (max |h - h^H| = {deviation:.3e})")


class StructureError(ValidationError):
    """Sector structure of a generalised history state is inconsistent."""


class IncompleteSpecificationError(ValidationError):
    pass


class DegenerateError(ValidationError):
    """A truncation or split would leave an empty (zero-mass) part."""


class ResourceError(HistgapError, RuntimeError):
    def __init__(self, message, required=None, available=None):
        self.required = required
        self.available = available
        if required is not None:
            message = f"{message} (required {required}, available {available})"
        super().__init__(message)


class ConvergenceError(HistgapError, RuntimeError):
    def __init__(self, message, residual=None):
        self.residual = residual
        if residual is not None:
            message = f"{message} (residual achieved {residual:.3e})"
        super().__init__(message)
