"""Exception hierarchy.

Everything raised on purpose by the library derives from :class:`CnpickError`,
so callers (the CLI in particular) can separate numerical failures from bugs.
"""


class CnpickError(Exception):
    """Base class for library errors."""


class AdmissibilityError(CnpickError, ValueError):
    """Point outside the open ball, wrong dimension, or malformed input."""


class NotCNPError(CnpickError, ValueError):
    """Operation needs a complete Pick kernel but got one that is not flagged CNP."""


class DuplicatePointError(CnpickError, ValueError):
    """Two indices carry the same point (zero pseudo-distance)."""


class TruncationError(CnpickError):
    """A series kernel cannot meet its tail tolerance at the requested truncation."""


class QuadratureError(CnpickError):
    """Moment quadrature did not converge or disagrees with its cross-check."""


class HermitianError(CnpickError, ValueError):
    """Matrix fails the Hermitian defect tolerance."""


class IndefiniteError(CnpickError):
    """Matrix is indefinite beyond the PSD tolerance."""


class SingularPickError(CnpickError):
    """Kernel matrix at the nodes is numerically singular."""


class InfeasibleError(CnpickError):
    """Norm budget is below the minimal multiplier norm."""


class IndeterminateSignError(CnpickError):
    """An eigenvalue sits inside the zero band, so the inertia count is ambiguous."""


class RealizationError(CnpickError):
    """Colligation construction or transfer-function evaluation failed."""


class PartitionError(CnpickError):
    """No certified partition could be produced."""


class SubsequenceError(CnpickError):
    """Greedy Riesz subsequence could not reach the requested size."""


class CompanionSearchError(CnpickError):
    """Ray search for a companion point left the disc before hitting the band."""

    def __init__(self, message, failed=()):
        super().__init__(message)
        self.failed = list(failed)
