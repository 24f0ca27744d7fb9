"""
Analysis report returned by the CLI and the /analyze endpoint.
"""
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel

from app.models.protocol import AuditReport


class Check(BaseModel):
    """A tolerance check: passed iff value < tolerance."""

    value: float
    tolerance: float
    passed: bool

    @classmethod
    def below(cls, value: float, tolerance: float) -> "Check":
        return cls(value=value, tolerance=tolerance, passed=bool(value < tolerance))


class CanonicalSummary(BaseModel):
    alphas: Tuple[float, float, float]
    residual: float
    global_phase: complex
    convention: str
    conjugation_residual: float


class CapabilitySummary(BaseModel):
    e_u: float
    e_u_minus: float
    gap: float
    increase_converged: bool
    decrease_converged: bool
    witness_residual: float
    oracle_value: Optional[float] = None
    oracle_samples: int = 0
    note: str


class OneWaySummary(BaseModel):
    gain: float
    chi_before: float
    chi_after: float
    first_term_residual: float


class BidirectionalSummary(BaseModel):
    forward_gain: float
    backward_gain: float
    total_gain: float
    chi_both_before: float
    chi_both_after: float
    gap: float
    gap_label: str
    ordering_residual: float


class AnalysisReport(BaseModel):
    tool_version: str
    seed: int
    gate: Dict[str, Any]
    canonical: CanonicalSummary
    capability: CapabilitySummary
    one_way: OneWaySummary
    bidirectional: BidirectionalSummary
    two_e_u_upper_bound: float
    twirl_residual: float
    audits: List[AuditReport] = []
    protocol_gap: Optional[str] = None
    checks: Dict[str, Check] = {}
    wall_clock_seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())
