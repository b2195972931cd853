"""Exception types shared across modules.

Each carries a short machine-readable ``code`` that the CLI reports on failure.
"""


class CscatError(Exception):
    code = "cscat.error"


class ConfigurationError(CscatError, ValueError):
    code = "config.invalid"


class PreconditionError(CscatError, ValueError):
    code = "precondition.failed"


class SingularEvaluationError(CscatError, ValueError):
    code = "specialfn.singular"


class DomainError(CscatError, ValueError):
    code = "forward.domain"


class NonConvergenceError(CscatError, RuntimeError):
    code = "solver.nonconvergence"

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history or [])


class IllConditioningError(CscatError, RuntimeError):
    code = "herglotz.ill_conditioned"


class DivergenceError(CscatError, RuntimeError):
    code = "cgo.divergence"


class CoverageError(CscatError, ValueError):
    code = "cgo.coverage"


class DegenerateFrequencyError(PreconditionError):
    code = "cgo.degenerate_frequency"


class SymbolZeroError(CscatError, RuntimeError):
    code = "cgo.symbol_zero"
