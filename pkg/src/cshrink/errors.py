"""Exception types raised across the package."""


class CShrinkError(Exception):
    """Base class for every error raised by cshrink."""


class NotHermitian(CShrinkError, ValueError):
    pass


class NotPositiveDefinite(CShrinkError, ValueError):
    pass


class NoConvergence(CShrinkError, RuntimeError):
    pass


class DegenerateSpectrum(CShrinkError, ValueError):
    """Eigenvalues coincide (or vanish) where the computation divides by them."""


class DimensionMismatch(CShrinkError, ValueError):
    pass


class DegenerateSample(CShrinkError, ValueError):
    pass


class NonFiniteResult(CShrinkError, FloatingPointError):
    pass


class BranchMismatch(CShrinkError, ValueError):
    """Raised for m == p where a shrinkage construction needs m > p or p > m."""


class ConstraintViolation(CShrinkError, ValueError):
    """A user-supplied gamma profile left its minimax region."""


class MissingArgument(CShrinkError, TypeError):
    pass


class ConfigInvalid(CShrinkError, ValueError):
    pass


class ConfigParseError(CShrinkError, ValueError):
    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
