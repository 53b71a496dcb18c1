"""
Exception hierarchy shared by every module of the lab.
"""


class PiltzLabError(Exception):
    """Base class for all lab errors."""


class DomainError(PiltzLabError, ValueError):
    """A precondition on the arguments of an operation does not hold."""


class CoverageError(PiltzLabError):
    """A query reaches beyond the range covered by the summatory checkpoints."""


class CapacityError(PiltzLabError, OverflowError):
    """The exact integer type would overflow (block or k too large)."""


class ChecksumError(PiltzLabError):
    """A checkpoint file is missing or its payload does not match its checksum."""


class PrecisionError(PiltzLabError):
    """An extended-precision certificate cannot be issued."""


class ConvergenceError(PiltzLabError):
    """A quadrature or a bracket did not reach the requested tolerance."""


class VerificationError(PiltzLabError):
    """An independent re-verification contradicted a computed result."""
