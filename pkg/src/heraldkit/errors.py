"""Exception hierarchy.

Every error carries a short ``code`` so the command line can emit a single
machine-parseable line (``error: <code>: <message>``).
"""


class HeraldkitError(Exception):
    code = "HERALDKIT_ERROR"


class RangeError(HeraldkitError, ValueError):
    """An input lies outside the validity window of a model."""

    code = "RANGE"

    def __init__(self, quantity, value, bound, limit, unit=""):
        self.quantity = quantity
        self.value = value
        self.bound = bound
        self.limit = limit
        suffix = f" {unit}" if unit else ""
        super().__init__(
            f"{quantity}={value:g}{suffix} violates {bound} bound {limit:g}{suffix}"
        )


class ConsistencyError(HeraldkitError, ValueError):
    code = "CONSISTENCY"


class DomainError(HeraldkitError, ValueError):
    code = "DOMAIN"


class NoSolutionError(HeraldkitError):
    code = "NO_SOLUTION"


class DegeneratePhaseMatchingError(HeraldkitError):
    code = "DEGENERATE_PHASE_MATCHING"


class ModelViolationError(HeraldkitError):
    code = "MODEL_VIOLATION"


class NumericError(HeraldkitError, ArithmeticError):
    code = "NUMERIC"


class DegenerateCountsError(HeraldkitError, ValueError):
    code = "DEGENERATE_COUNTS"


class ConfigError(HeraldkitError, ValueError):
    code = "CONFIG"
