"""Exception hierarchy shared by every module."""


class SparseNasError(Exception):
    """Base class for all package errors."""


class ContractError(SparseNasError, ValueError):
    """A precondition on shapes, ranges or arguments was violated."""


class NumericError(SparseNasError, ArithmeticError):
    """A non-finite value appeared where a finite one was required."""


class DivergenceError(NumericError):
    """An iteration produced a non-finite iterate."""


class ConfigError(SparseNasError, ValueError):
    """Malformed or invalid experiment configuration."""
