"""Exception types shared across the package."""


class GraphFormError(Exception):
    """Base class for all package errors."""


class DimensionError(GraphFormError, ValueError):
    """Vector or matrix dimensions do not match."""


class ParameterError(GraphFormError, ValueError):
    """A parameter is outside its allowed range."""


class DegenerateInputError(GraphFormError, ValueError):
    """Input is structurally unusable (e.g. an all-zero matrix)."""


class NumericError(GraphFormError, RuntimeError):
    """A numerical operation failed (non-finite data, factorization)."""


class ProblemFormatError(GraphFormError, ValueError):
    """A problem or matrix file is malformed."""
