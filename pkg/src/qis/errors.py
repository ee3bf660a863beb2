"""Exception types shared across the package."""


class QisError(Exception):
    """Base class for all package errors."""


class SizeError(QisError, ValueError):
    """Inconsistent or oversized dimensions."""


class ContractError(QisError, ValueError):
    """An input violates a documented precondition (e.g. non-Hermitian)."""


class SupportError(QisError, ValueError):
    """supp(rho) is not contained in supp(sigma); the relative entropy diverges."""

    def __init__(self, message, overlap):
        super().__init__(message)
        self.overlap = overlap


class KindError(QisError, ValueError):
    """A measurement family of the wrong kind was supplied."""


class ConfigurationError(QisError, ValueError):
    """Invalid experiment configuration."""


class ParseError(QisError, ValueError):
    """Malformed input file."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class OrderingError(QisError):
    """The l >= xi_q >= xi_acc >= xi_c chain was violated beyond slack."""


class NonFiniteLossError(QisError, FloatingPointError):
    """The training loss became NaN or infinite."""

    def __init__(self, step):
        super().__init__(f"non-finite loss at SPSA step {step}")
        self.step = step
