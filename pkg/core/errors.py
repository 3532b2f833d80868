# core/errors.py

from typing import Any, Dict, Optional


class SplitRxError(Exception):
    """Root of every error raised by the toolkit."""


class DomainError(SplitRxError, ValueError):
    """Argument lies outside the domain of a formula (e.g. E1 at x <= 0)."""


class ContractViolation(SplitRxError, ValueError):
    """A caller-side precondition was broken."""


class NumericError(SplitRxError, RuntimeError):
    """A numerical routine failed to reach its tolerance."""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}

    def __str__(self) -> str:
        base = super().__str__()
        if not self.diagnostics:
            return base
        details = ", ".join(f"{k}={v}" for k, v in self.diagnostics.items())
        return f"{base} ({details})"


class SpecValidationError(SplitRxError, ValueError):
    """Experiment spec failed validation; `fields` names every offending field."""

    def __init__(self, message: str, fields: Optional[list[str]] = None):
        super().__init__(message)
        self.fields = fields or []
