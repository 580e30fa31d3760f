"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: subclasses of :class:`UsageError` map to
exit code 2, subclasses of :class:`NumericalError` to exit code 3, and
non-convergence (which produces partial output, not an exception) to 4.
"""


class SomorError(Exception):
    """Base class for all package errors."""


class UsageError(SomorError):
    """Bad arguments, parameters, or input files."""


class ParameterError(UsageError):
    """Benchmark or option parameters outside their valid range."""


class StructuralError(UsageError):
    """System matrices with inconsistent dimensions."""


class ManifestError(UsageError):
    """Malformed or missing manifest / model files."""


class NumericalError(SomorError):
    """Numerical failure during factorization or reduction."""


class ConstraintDegeneracyError(NumericalError):
    """Constraint matrix is (numerically) row-rank deficient."""


class FactorizationError(NumericalError):
    """A required factorization failed (singular mass matrix, ...)."""


class ShiftAtEigenvalueError(NumericalError):
    """Augmented system is singular or near-singular at the given shift."""

    def __init__(self, msg, shift=None, rcond=None, shift_index=None):
        super().__init__(msg)
        self.shift = shift
        self.rcond = rcond
        self.shift_index = shift_index


class SolveAccuracyError(NumericalError):
    """A linear solve violated its residual guarantee even after refinement."""


class DenseCapError(NumericalError):
    """Problem too large for a dense desk-scale code path."""


class RankError(NumericalError):
    """Numerical rank differs from the expected value."""


class BasisCollapseError(NumericalError):
    """Projection basis lost rank (typically duplicate interpolation points)."""


class ReducedModelSingularError(NumericalError):
    """Reduced mass matrix is singular; iteration cannot continue."""


class StabilityError(NumericalError):
    """Matrix pencil has eigenvalues outside the open left half-plane."""


class ShiftUpdateError(NumericalError):
    """Interpolation-point update failed (unstable or defective reduced pencil)."""


class PoleError(NumericalError):
    """Transfer-function evaluation requested at (or too near) a pole."""
