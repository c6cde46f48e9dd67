"""Exception hierarchy. CLI exit codes are attached to the classes."""


class BlowupLabError(Exception):
    exit_code = 3


class DomainError(BlowupLabError, ValueError):
    """Argument outside the region where a quantity is defined."""


class DivergenceError(BlowupLabError):
    """An improper integral does not converge."""


class NumericalError(BlowupLabError, RuntimeError):
    """Iteration failed to converge; ``history`` holds diagnostics."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []


class ValidationError(BlowupLabError, ValueError):
    """Invalid parameters or a violated structural hypothesis."""


class OutOfRangeError(DomainError):
    def __init__(self, message, beta=None):
        super().__init__(message)
        self.beta = beta


class ExistenceGateError(BlowupLabError):
    """Raised when ``a >= lambda_inf_1``: no large solution exists."""

    exit_code = 4

    def __init__(self, a, lam):
        super().__init__(f"a = {a:g} >= lambda_inf_1 ~ {lam:.4g}: no large solution exists")
        self.a = a
        self.lam = lam


class ConfigError(BlowupLabError):
    exit_code = 2
