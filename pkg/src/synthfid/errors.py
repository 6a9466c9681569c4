"""Exception types raised across the package.

Numerical failures (conditioning, fitting, degenerate bases) derive from
:class:`NumericalError`; malformed inputs derive from both
:class:`SynthfidError` and :class:`ValueError` so callers can catch either.
"""


class SynthfidError(Exception):
    """Base class for all package errors."""


class ShapeError(SynthfidError, ValueError):
    """Array arguments have inconsistent or unexpected dimensions."""


class DatasetError(SynthfidError, ValueError):
    """A dataset violates its invariants (NaNs, non-block design, ...)."""


class ParseError(DatasetError):
    """A dataset file could not be parsed.

    Attributes
    ----------
    line : int or None
        1-based line number of the offending record, when known.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DomainBoundsError(SynthfidError, ValueError):
    """A point lies outside a benchmark pair's domain box."""

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class NumericalError(SynthfidError):
    """Base class for numerical failures (maps to CLI exit code 3)."""


class ConditioningError(NumericalError):
    """Cholesky factorization failed even after jitter escalation.

    Attributes
    ----------
    attempted_jitter : float
        The largest jitter magnitude that was tried before giving up.
    """

    def __init__(self, message, attempted_jitter):
        super().__init__(f"{message} (largest jitter attempted: {attempted_jitter:g})")
        self.attempted_jitter = attempted_jitter


class FitError(NumericalError):
    """Every optimizer restart failed.

    Attributes
    ----------
    causes : list of str
        One failure description per restart.
    """

    def __init__(self, causes):
        lines = "; ".join(f"restart {i}: {c}" for i, c in enumerate(causes))
        super().__init__(f"all restarts failed: {lines}")
        self.causes = list(causes)


class InvalidTaskCovarianceError(NumericalError):
    """The expanded task matrix is not positive semi-definite.

    Attributes
    ----------
    min_eigenvalue : float
        Smallest eigenvalue of the offending expanded task matrix.
    """

    def __init__(self, min_eigenvalue):
        super().__init__(
            "expanded task matrix is not positive semi-definite "
            f"(min eigenvalue {min_eigenvalue:.3e})"
        )
        self.min_eigenvalue = min_eigenvalue


class DegenerateBasisError(NumericalError):
    """A sample-basis column has zero variance (constant fidelity or prior)."""


class IllConditionedBasisError(NumericalError):
    """The basis covariance is too ill-conditioned to solve against.

    Attributes
    ----------
    condition : float
        Estimated 2-norm condition number.
    """

    def __init__(self, condition, threshold):
        super().__init__(
            f"basis covariance condition number {condition:.3e} exceeds "
            f"{threshold:.3e}; try a different prior-draw seed or drop "
            "near-duplicate fidelities"
        )
        self.condition = condition
        self.threshold = threshold


class HeuristicVarianceError(NumericalError):
    """The correlation targets have zero overlap with the basis."""


class BasisMismatchError(SynthfidError, ValueError):
    """A correlation spec was validated against a different basis."""


class CorrelationMatrixError(SynthfidError, ValueError):
    """A proposed correlation matrix is not valid (unit-diagonal PSD)."""


class BoundsRangeError(SynthfidError, ValueError):
    """A correlation value falls outside its currently valid interval.

    Attributes
    ----------
    lower, upper : float
        The valid interval at the time of the choice.
    """

    def __init__(self, value, lower, upper, index):
        super().__init__(
            f"correlation entry {index} = {value:.6f} is outside the valid "
            f"interval [{lower:.6f}, {upper:.6f}]"
        )
        self.value = value
        self.lower = lower
        self.upper = upper
        self.index = index


class SessionError(SynthfidError):
    """A bounds session was used out of order (exhausted or incomplete)."""
