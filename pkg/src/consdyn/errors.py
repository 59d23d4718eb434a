"""Exception types shared across the package.

Every failure mode that callers are expected to handle gets its own class so
that the CLI can map library failures onto exit codes without string matching.
"""

from __future__ import annotations

__all__ = [
    "ConsdynError",
    "DimensionMismatchError",
    "InvalidArgumentError",
    "NotPositiveDefiniteError",
    "NonConvergedError",
    "ZetaSubstepFailedError",
    "SingularElementError",
    "UnknownTagError",
]


class ConsdynError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatchError(ConsdynError, ValueError):
    """Array shapes do not match the dimensions a problem declared."""


class InvalidArgumentError(ConsdynError, ValueError):
    """An argument is outside the domain of the operation (e.g. n_steps <= 0)."""


class NotPositiveDefiniteError(ConsdynError, ValueError):
    """A matrix that must be symmetric positive definite is not."""


class NonConvergedError(ConsdynError, RuntimeError):
    """An iterative solve exhausted its budget before reaching tolerance.

    Attributes
    ----------
    iterations:
        Number of iterations actually performed.
    step_index:
        Time-step index at which the failure occurred, when known (set by the
        trajectory driver so the CLI can report it).
    """

    def __init__(self, message: str, iterations: int | None = None,
                 step_index: int | None = None):
        super().__init__(message)
        self.iterations = iterations
        self.step_index = step_index


class ZetaSubstepFailedError(NonConvergedError):
    """The internal-variable (damage) substep failed to converge."""


class SingularElementError(ConsdynError, ValueError):
    """A finite element has non-positive Jacobian determinant."""


class UnknownTagError(ConsdynError, KeyError):
    """A boundary tag was requested that the mesh does not define."""
