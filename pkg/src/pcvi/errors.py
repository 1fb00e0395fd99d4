"""Exception hierarchy."""


class PCVIError(Exception):
    pass


class InputError(PCVIError, ValueError):
    """Malformed arguments: dimension mismatch, out-of-range parameter."""


class ConfigurationError(PCVIError, ValueError):
    """Inadmissible solver or experiment configuration."""


class NumericalDivergence(PCVIError, ArithmeticError):
    def __init__(self, k, message=None):
        self.k = k
        super().__init__(message or f"non-finite iterate encountered at k={k}")


class StepSizeFailure(PCVIError, RuntimeError):
    """Backtracking exhausted its trial budget without meeting the step condition."""


class DegenerateStep(PCVIError):
    """Raised by a step when the search direction vanishes (x is a solution).

    Carries the iterate at which it happened so the driver can stop there.
    """

    def __init__(self, x, d_norm):
        self.x = x
        self.d_norm = d_norm
        super().__init__(f"degenerate direction, ||d|| = {d_norm:.3e}")


class OracleError(PCVIError, RuntimeError):
    pass
