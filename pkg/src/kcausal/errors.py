"""Exception types shared across the package."""


class KCausalError(Exception):
    """Base class for all errors raised by this package."""


class NotPositiveDefinite(KCausalError):
    """A matrix required to be positive definite failed factorization.

    Callers that can tolerate near-singularity should add a ridge and retry.
    """


class NumericalBreakdown(KCausalError):
    """A residual that must stay nonnegative went significantly negative."""


class RankDeficient(KCausalError):
    """A covariance block is singular beyond the automatic ridge floor."""


class IllPosed(KCausalError):
    """A problem was configured without the regularization it needs."""


class DomainError(KCausalError):
    """A score was requested for values outside its mathematical domain."""


class ZeroVariance(KCausalError):
    """A column is constant and cannot be standardized."""

    def __init__(self, name):
        super().__init__(f"column {name!r} has zero variance")
        self.name = name


class DegenerateInput(KCausalError):
    """An input sequence is constant where variation is required."""


class InsufficientLength(KCausalError):
    """The series is too short for the requested lag count."""


class ConfigError(KCausalError):
    """A configuration value is invalid or inconsistent."""


class ParseError(KCausalError):
    """A CSV file could not be parsed."""

    def __init__(self, message, line=None, col=None):
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", col {col}" if col is not None else "") + ")"
        super().__init__(message + loc)
        self.line = line
        self.col = col


class UnknownVariable(KCausalError):
    """A block definition references a variable absent from the data."""

    def __init__(self, name):
        super().__init__(f"unknown variable {name!r}")
        self.name = name


class NonNumericCell(ParseError):
    """A data cell could not be read as a number."""

    def __init__(self, line, col):
        super().__init__("non-numeric cell", line=line, col=col)


class SaturationWarning(UserWarning):
    """A determinant ratio hit its cap; the reported score is truncated."""
