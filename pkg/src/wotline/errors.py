"""Exception hierarchy for wotline.

Every failure mode raised by the library is a subclass of ``WotlineError``.
Validation errors (bad user input) and internal-consistency errors (bugs,
numerical drift past safeguards) are kept on separate branches so callers
can map them to different exit codes.
"""

from __future__ import annotations


class WotlineError(Exception):
    """Base class for all wotline errors."""

    #: short machine-readable code used in CLI error objects
    code = "Error"


class ValidationError(WotlineError):
    """Bad input: violated precondition or malformed data."""

    code = "ValidationError"


class InternalInconsistency(WotlineError):
    """A structural identity that must hold by construction failed.

    Signals a bug or numerical drift past tolerances, never bad input.
    """

    code = "InternalInconsistency"


# ==== validation errors ====================================================


class NegativeMass(ValidationError):
    """An atom was given a negative mass."""

    code = "NegativeMass"


class BadInterval(ValidationError):
    """Interval endpoints out of order (lo > hi)."""

    code = "BadInterval"


class OutOfRange(ValidationError):
    """A scalar argument fell outside its documented range."""

    code = "OutOfRange"


class MassMismatch(ValidationError):
    """Two measures were required to have equal total mass but do not."""

    code = "MassMismatch"


class MassOrder(ValidationError):
    """mass(mu) <= mass(nu) was required but does not hold."""

    code = "MassOrder"


class UnboundedHull(ValidationError):
    """The convex hull is -infinity (left slope exceeds right slope)."""

    code = "UnboundedHull"


class Unbounded(ValidationError):
    """A supremum or linear program is +infinity."""

    code = "Unbounded"


class NotInD(ValidationError):
    """A function failed the membership test for the class of potentials."""

    code = "NotInD"


class MarginalMismatch(ValidationError):
    """A coupling's row/column sums do not match the stated marginals."""

    code = "MarginalMismatch"


class OrderViolation(ValidationError):
    """A required stochastic-order relation between measures fails."""

    code = "OrderViolation"


class DimensionMismatch(ValidationError):
    """Matrix or sequence dimensions are inconsistent with the supports."""

    code = "DimensionMismatch"


class LpInfeasible(ValidationError):
    """A linear program that must be feasible for valid input is not."""

    code = "LpInfeasible"


class NegativeRemainder(ValidationError):
    """Sequential mass subtraction drove a remainder negative beyond eps."""

    code = "NegativeRemainder"


class BadOrder(ValidationError):
    """A custom lift order is not a valid permutation of atom slices."""

    code = "BadOrder"


class NumericalFailure(WotlineError):
    """An iterative numerical procedure failed to converge reliably."""

    code = "NumericalFailure"
