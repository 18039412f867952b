"""Exception hierarchy.

Every error raised on purpose by the package derives from
:class:`PruferError`, so callers (the CLI in particular) can map them to
exit codes without catching unrelated exceptions.
"""


class PruferError(Exception):
    """Base class for all package errors."""


class ContractViolation(PruferError, ValueError):
    """An input does not satisfy the documented invariants of an operation."""


class InvalidBoundaryError(ContractViolation):
    """Boundary data that does not define a self-adjoint problem."""


class ConditioningError(ContractViolation):
    """A model block is too close to singular for the theory to apply."""


class NumericalDegeneracyError(PruferError):
    """Independent numerical routes disagree beyond their tolerance."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class RouteDisagreementError(NumericalDegeneracyError):
    """Möbius recursion and dense transfer-product route disagree."""


class SamplingError(PruferError):
    """A sampled path is too coarse and cannot be refined further."""

    def __init__(self, message, interval=None):
        super().__init__(message)
        self.interval = interval


class AmbiguousCrossingError(PruferError):
    """An eigenphase sits exactly on 0 where a sign is needed."""


class TangencyError(PruferError):
    """A path stays on the singular cycle and the crossing cannot be resolved."""

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class CompletenessError(PruferError):
    """Located eigenvalues do not add up to the expected total."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class IntegrationError(PruferError):
    """The ODE integrator could not meet its drift budget."""


class NumericalWarning(UserWarning):
    """Singular values fall inside the rank-decision grey zone."""


class ParseError(PruferError):
    """A file is not valid JSON or does not have the expected layout."""
