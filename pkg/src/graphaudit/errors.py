"""Exception types shared across the package."""


class AuditError(Exception):
    """Base class for all graphaudit errors."""


class GraphFormatError(AuditError):
    """Raised when a graph file is malformed or violates structural invariants."""

    def __init__(self, message: str, cycle: tuple[str, ...] | None = None):
        super().__init__(message)
        self.cycle = cycle


class ExamFormatError(AuditError):
    """Raised when an exam file is malformed; message names the offending items."""


class JudgeTransportError(AuditError):
    """Raised when a remote judge request fails after retries."""


class PerturbationError(AuditError):
    """Raised when a requested perturbation cannot be applied."""
