"""
Exception hierarchy shared by every module.

Library code raises these; only the CLI and the tools turn them into
`ERROR:` lines and exit codes (2 for config/parse/load problems, 1 for
failed checks).
"""

from __future__ import annotations

from typing import Optional


class HypersurfaceError(Exception):
    """Root of every error raised by this package."""


# -----------------------------------------------------------------------------
# jetcalc
# -----------------------------------------------------------------------------
class JetError(HypersurfaceError):
    pass


class UnboundVariable(JetError):
    def __init__(self, name: str):
        super().__init__(f"unbound variable '{name}'")
        self.name = name


class DomainError(JetError):
    pass


class VariableSetError(JetError):
    pass


class StepUnderflow(JetError):
    pass


class ExprError(HypersurfaceError):
    pass


class ExprSyntaxError(ExprError):
    """Parse failure; `offset` is the byte offset into the source text."""

    def __init__(self, message: str, offset: int, source: str = ""):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset
        self.source = source


class UnknownFunction(ExprError):
    def __init__(self, name: str, offset: Optional[int] = None):
        where = f" at offset {offset}" if offset is not None else ""
        super().__init__(f"unknown function '{name}'{where}")
        self.name = name
        self.offset = offset


# -----------------------------------------------------------------------------
# curve / surface
# -----------------------------------------------------------------------------
class CurveError(HypersurfaceError):
    pass


class OutOfDomain(CurveError):
    pass


class TransversalityViolation(CurveError):
    pass


class DegenerateSpeed(CurveError):
    pass


class UnitSpeedViolation(CurveError):
    """A unit-speed relation fails by more than the certificate allows."""


class SurfaceError(HypersurfaceError):
    pass


class PoleDegeneracy(SurfaceError):
    pass


# -----------------------------------------------------------------------------
# fields
# -----------------------------------------------------------------------------
class FieldError(HypersurfaceError):
    pass


class RestrictionMismatch(FieldError):
    pass


class NoDivFreeExtension(FieldError):
    pass


# -----------------------------------------------------------------------------
# verify / cli
# -----------------------------------------------------------------------------
class VerifyError(HypersurfaceError):
    pass


class ContextViolation(VerifyError):
    pass


class ConfigError(VerifyError):
    """Bad configuration; `location` names the offending file/key/flag."""

    def __init__(self, message: str, location: str = ""):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location
