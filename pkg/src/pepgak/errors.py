"""Exception hierarchy, with process exit codes for the CLI."""


class PepgakError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class ValidationError(PepgakError):
    """Invalid input data or configuration."""

    exit_code = 2


class ParseError(ValidationError):
    """Malformed dataset line; carries the 1-based line number."""

    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class IntegrityError(ValidationError):
    """Referential integrity violation (dangling ids, conflicting tables)."""


class NumericalError(PepgakError):
    """Numerical failure (factorization, convergence, normalization)."""

    exit_code = 3


class FactorizationError(NumericalError):
    """Cholesky factorization failed even after jitter escalation."""


class ConvergenceError(NumericalError):
    """Iterative solver did not converge within its iteration budget."""


class NormalizationError(NumericalError):
    """Cosine normalization hit a zero self-similarity."""
