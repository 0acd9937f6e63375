"""Exception types shared by the pipeline modules."""


class QdotError(Exception):
    """Base class for all errors raised by qdot_ci."""


class ValidationError(QdotError, ValueError):
    """Bad input. Carries the module and field that failed."""

    def __init__(self, module, field, message):
        self.module = module
        self.field = field
        super().__init__(f"{module}.{field}: {message}")


class ConvergenceError(QdotError, RuntimeError):
    """Iterative solve or fit failed to converge."""

    def __init__(self, message, worst_residual=None, trace=None):
        self.worst_residual = worst_residual
        self.trace = trace
        super().__init__(message)


class CapacityError(QdotError, MemoryError):
    """Problem too large for the requested (dense) method."""


class PipelineError(QdotError, RuntimeError):
    """Failure at one point of a sweep; ``context`` names the point."""

    def __init__(self, context, cause):
        self.context = context
        self.cause = cause
        super().__init__(f"{context}: {type(cause).__name__}: {cause}")
