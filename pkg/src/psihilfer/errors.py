"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class PsiHilferError(Exception):
    """Base class for every error raised by this package."""


class ExprError(PsiHilferError):
    """Errors from parsing or evaluating expressions.

    :attr:`offset` is the byte offset into the source text, when known.
    """

    def __init__(self, message: str, offset: int | None = None) -> None:
        self.offset = offset
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)


class ExprSyntaxError(ExprError):
    pass


class UnknownIdentifierError(ExprError):
    pass


class ArityError(ExprError):
    pass


class MissingBindingError(ExprError):
    pass


class DomainError(ExprError, ArithmeticError):
    """Evaluation left the real domain (log of non-positive, division by zero, ...)."""


class PoleError(PsiHilferError, ArithmeticError):
    """Gamma function evaluated at a non-positive integer."""


class GammaOverflowError(PsiHilferError, OverflowError):
    pass


class SeriesConvergenceError(PsiHilferError, ArithmeticError):
    """A truncated series hit its term cap before meeting its tolerance."""


class ValidationError(PsiHilferError, ValueError):
    """A value violates a documented invariant.

    :attr:`field` names the offending field when the error comes from config
    ingestion.
    """

    def __init__(self, message: str, field: str | None = None) -> None:
        self.field = field
        super().__init__(message)


class MonotonicityError(ValidationError):
    pass


class DerivativeMismatchError(ValidationError):
    pass


class MeshMismatchError(PsiHilferError, ValueError):
    pass


class ExclusionZoneError(PsiHilferError, ValueError):
    """A derivative was requested too close to the left endpoint."""


class NonFiniteError(PsiHilferError, ArithmeticError):
    pass


class HypothesisViolation(PsiHilferError):
    """A structural assumption on ``f`` or ``g`` fails on the probed lattice."""


class PreconditionError(PsiHilferError):
    pass


class BracketingError(PsiHilferError):
    """Root bracketing for the perturbed super-solution failed at some node."""

    def __init__(self, message: str, node: int | None = None) -> None:
        self.node = node
        super().__init__(message)


class ConvergenceError(PsiHilferError):
    """An iteration that must converge for a result to be meaningful did not."""
