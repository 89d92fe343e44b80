"""Exception hierarchy. All domain failures derive from GevDesignError."""


class GevDesignError(Exception):
    """Base class for all domain errors raised by this package."""


class ParameterError(GevDesignError):
    """Invalid distribution parameters (sigma <= 0, non-finite fields, bad prob)."""


class SupportError(GevDesignError):
    """A data point lies on or outside the distribution support boundary."""


class DataError(GevDesignError):
    """Input data violates a precondition (too few records, degenerate sample)."""


class ParseError(GevDesignError):
    """Malformed input file; carries the offending line number when known."""

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class FitError(GevDesignError):
    """Optimizer failed to converge; carries the best iterate found."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ExtrapolationError(GevDesignError):
    """Prediction requested outside the fitted covariate range."""


class InversionError(GevDesignError):
    """Root bracketing for a return-level inversion failed."""


class BootstrapError(GevDesignError):
    """Too many bootstrap replicates failed to refit."""
