"""Exception hierarchy shared by all modules.

The CLI maps :class:`DomainError` (and its subclasses) to exit code 2 and
:class:`ConvergenceError` to exit code 3.
"""


class CuspwaveError(Exception):
    """Base class for every error raised by this package."""


class DomainError(CuspwaveError, ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class ValidationError(DomainError):
    """Malformed user input; ``pointer`` is a JSON pointer to the culprit."""

    def __init__(self, message, pointer=""):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer


class SubcriticalParameterError(DomainError):
    """Bernoulli constant at or below r_c: no streams (and no waves) exist."""


class BeyondR0Error(DomainError):
    """Bernoulli constant at or above r_0 for a class II/III vorticity."""


class NumericalError(CuspwaveError, RuntimeError):
    """An inner numerical routine (integrator, bracket search) failed."""


class ConvergenceError(NumericalError):
    """Newton iteration or continuation failed to converge."""

    def __init__(self, message, residual=None, partial=None):
        super().__init__(message)
        self.residual = residual
        self.partial = partial if partial is not None else []


class TurningPointError(ConvergenceError):
    """The Jacobian became (numerically) singular, a fold is suspected."""
