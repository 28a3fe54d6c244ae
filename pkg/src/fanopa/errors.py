"""Exception hierarchy.

Every error carries a ``category`` used by the command-line front end to
pick an exit status: 1 config, 2 numeric, 3 fit non-convergence, 4 I/O.
"""


class FanoPAError(Exception):
    category = 2


# configuration -------------------------------------------------------------

class ValidationError(FanoPAError, ValueError):
    """An invariant on an input value was violated.  ``field`` names it."""

    category = 1

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class ParseError(FanoPAError):
    category = 1

    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)


# numerics ------------------------------------------------------------------

class SingularDenominator(FanoPAError, ZeroDivisionError):
    category = 2


class UnitarityViolation(FanoPAError):
    category = 2


class QuadratureNonConvergence(FanoPAError):
    category = 2


class DomainError(FanoPAError, ValueError):
    category = 2


class NoPeak(FanoPAError):
    category = 2


class DegenerateJacobian(FanoPAError):
    category = 2


class NegativeRate(FanoPAError):
    category = 2


class NonConvergence(FanoPAError):
    """Iterative solver hit its cap.  ``best`` holds the best result so far."""

    category = 3

    def __init__(self, message, best=None):
        self.best = best
        super().__init__(message)


# I/O -----------------------------------------------------------------------

class SchemaError(FanoPAError):
    category = 4


class MonotonicityError(FanoPAError):
    category = 4
