from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Diagnostic:
    line: int
    col: int
    message: str

    def __str__(self) -> str:
        return f"{self.line}:{self.col}: {self.message}"


class BaselError(Exception):
    pass


class SpecError(BaselError):
    """A program failed to lex, parse or validate."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


class EvalError(BaselError):
    """Runtime fault while evaluating a user expression."""

    def __init__(self, message, where=None):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)

    def located(self, where):
        if self.where is not None:
            return self
        return EvalError(str(self), where)


class SimulationError(BaselError):
    def __init__(self, message, slot=None, where=None):
        self.slot = slot
        self.where = where
        super().__init__(message)


class TraceFormatError(BaselError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class OracleRefusal(BaselError):
    """The instance is outside the exhaustive-search bounds."""
