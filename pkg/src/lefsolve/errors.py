"""Exception hierarchy.

Every error carries a short ``category`` string which the command line
front end writes into its machine-readable error report.
"""


class LefError(Exception):
    category = "Error"


class ExprSyntaxError(LefError, ValueError):
    """Malformed coefficient expression; ``position`` is a 0-based offset."""

    category = "ExprSyntaxError"

    def __init__(self, message, position):
        super().__init__(f"{message} at position {position}")
        self.position = position


class NegativeCoefficient(LefError, ValueError):
    category = "NegativeCoefficient"

    def __init__(self, value, r, theta):
        super().__init__(
            f"coefficient is negative or not finite ({value!r}) at r={r!r}, theta={theta!r}"
        )
        self.value = value
        self.r = r
        self.theta = theta


class NonIntegrable(LefError, ArithmeticError):
    """A tail integral that should be finite appears to diverge."""

    category = "NonIntegrable"


class ThresholdBracketError(NonIntegrable):
    category = "ThresholdBracketError"


class NoConvergence(LefError, RuntimeError):
    category = "NoConvergence"

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history or [])


class LinearSolveFailure(NoConvergence):
    category = "LinearSolveFailure"


class MaxPrincipleViolation(LefError, RuntimeError):
    category = "MaxPrincipleViolation"


class VerificationFailure(LefError, AssertionError):
    category = "VerificationFailure"


class WindowTooFar(LefError, ValueError):
    category = "WindowTooFar"


class ConfigError(LefError, ValueError):
    category = "ConfigError"

    def __init__(self, message, line=None, key=None):
        where = []
        if key is not None:
            where.append(f"key {key!r}")
        if line is not None:
            where.append(f"line {line}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(message + suffix)
        self.line = line
        self.key = key
