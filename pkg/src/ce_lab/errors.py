"""Exception types shared across the package.

The CLI maps each family onto a stable exit code, so new errors should
subclass one of these rather than raising bare ``ValueError``.
"""


class CELabError(Exception):
    """Base class for all package errors."""


class DomainError(CELabError, ValueError):
    """A quantity is mathematically undefined for the given input."""


class NotSPDError(DomainError):
    """A covariance matrix failed the symmetric positive-definite check."""


class RankError(DomainError):
    """A matrix does not have the rank an operation requires."""


class StructuralError(CELabError, ValueError):
    """The requested reduction dimension is incompatible with the spectrum."""


class ConjugatePairSplit(StructuralError):
    """Retaining ``k`` eigenvalues would separate a complex-conjugate pair.

    Attributes
    ----------
    k : int
        The rejected macro dimension.
    suggestions : tuple of int
        Neighbouring dimensions that keep every pair intact.
    """

    def __init__(self, k: int, suggestions=()):
        self.k = k
        self.suggestions = tuple(suggestions)
        hint = f"; try k in {list(self.suggestions)}" if self.suggestions else ""
        super().__init__(f"k={k} splits a complex-conjugate eigenvalue pair{hint}")


class SpecError(CELabError, ValueError):
    """A system specification file is malformed."""
