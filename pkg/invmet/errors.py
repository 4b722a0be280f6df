from typing import Any, Optional


class InvmetError(RuntimeError):
    """Base class for every failure raised by the laboratory."""


class DomainError(InvmetError):
    """An argument lies outside the interval or set an operation is defined on."""


class CertificationError(InvmetError):
    """A sampled hypothesis (monotonicity, admissibility) could not be certified."""


class RegimeError(InvmetError):
    """The inputs fall outside the parameter region a formula or construction covers."""


class ConstructionError(InvmetError):
    def __init__(self, message: str, witness: Optional[Any] = None) -> None:
        super().__init__(message)
        self.witness = witness


class EvaluationError(InvmetError):
    """A numerical evaluation was refused (e.g. too close to a non-smooth locus)."""
