"""
Error types shared by every heston_escape module.
"""
from typing import Any, Dict, Optional


class EscapeError(Exception):
    """Base class for all errors raised by heston_escape."""


class ParameterDomainError(EscapeError, ValueError):
    """An input lies outside the domain where a formula is defined."""

    def __init__(self, field: str, value: Any, message: str = ""):
        self.field = field
        self.value = value
        detail = message or "outside the admissible domain"
        super().__init__(f"{field}={value!r}: {detail}")


class ConvergenceError(EscapeError, ArithmeticError):
    """A series, quadrature or special-function evaluation did not converge."""

    def __init__(
        self,
        message: str,
        modes_used: int = 0,
        truncation_estimate: float = float("nan"),
        diagnostics: Optional[Dict[str, Any]] = None,
    ):
        self.modes_used = modes_used
        self.truncation_estimate = truncation_estimate
        self.diagnostics = diagnostics or {}
        super().__init__(message)


def require(condition: bool, field: str, value: Any, message: str) -> None:
    """Raise ParameterDomainError naming ``field`` unless ``condition`` holds."""
    if not condition:
        raise ParameterDomainError(field, value, message)
