"""
Engine exceptions.

Each error carries the name of the module that raised it so that the CLI
and the HTTP layer can print module-tagged diagnostics, e.g.
"[canonical] reconstruction residual 3.1e-07 exceeds 1e-09".

ValueError subclasses are input problems (HTTP 400, CLI exit 2).
ArithmeticError subclasses are numerical failures on valid input (HTTP 422).
"""
from typing import Dict, List, Optional


class EngineError(Exception):
    module: str = "engine"

    def __init__(self, message: str, module: Optional[str] = None):
        super().__init__(message)
        if module:
            self.module = module

    def diagnostic(self) -> str:
        return f"[{self.module}] {self}"


class QubitIndexError(EngineError, ValueError):
    module = "qla"


class NonUnitaryError(EngineError, ValueError):
    module = "qla"


class DimensionMismatchError(EngineError, ValueError):
    module = "qla"


class EigenSolverError(EngineError, ArithmeticError):
    module = "qla"


class DecompositionError(EngineError, ArithmeticError):
    module = "canonical"


class InvalidEnsembleError(EngineError, ValueError):
    module = "ensembles"


class GateSpecError(EngineError, ValueError):
    module = "cli"


class ProtocolError(EngineError, ValueError):
    module = "protocols"


class ImperfectProtocolError(ProtocolError):
    """Raised by the audit when some message pair is not transferred exactly."""

    def __init__(self, message: str, fidelities: List[Dict]):
        super().__init__(message)
        self.fidelities = fidelities


class InvalidPauliError(EngineError, ValueError):
    module = "qla"
