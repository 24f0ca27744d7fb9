"""
Optimizer settings and entanglement-capability results.
"""
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

from config import get_settings
from app.models.state import PureState

Direction = Literal["increase", "decrease"]

# Both directions are optimized on the same 4-qubit register.
ANCILLA_NOTE = (
    "one ancilla per side (qubits 1 and 4) for both the increase and the decrease problem"
)


class OptimizerConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    restarts: int = Field(32, ge=1)
    max_iters: int = Field(5000, ge=1)
    grad_tol: float = Field(1e-7, gt=0)
    fd_step: float = Field(1e-6, gt=0)
    seed: int = 20240917
    oracle_samples: int = Field(1_000_000, ge=0)

    @classmethod
    def from_settings(cls, **overrides) -> "OptimizerConfig":
        s = get_settings()
        base = dict(
            restarts=s.OPT_RESTARTS,
            max_iters=s.OPT_MAX_ITERS,
            grad_tol=s.OPT_GRAD_TOL,
            fd_step=s.OPT_FD_STEP,
            seed=s.OPT_SEED,
            oracle_samples=s.ORACLE_SAMPLES,
        )
        base.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**base)


class RestartTrace(BaseModel):
    restart: int
    seed: int
    value: float
    iterations: int
    grad_norm: float
    perturbations: int
    converged: bool


class CapabilityResult(BaseModel):
    """Best value of +-delta_e over all restarts, with the state that attains it."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    value: float
    argmax_state: PureState
    direction: Direction
    restarts_used: int
    converged: bool
    seed: int
    best_restart: int = 0
    traces: List[RestartTrace] = []
    note: str = ANCILLA_NOTE


class OracleResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    value: float
    best_state: Optional[PureState] = None
    samples: int
    seed: int
    direction: Direction


class SymmetryReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    alphas: Tuple[float, float, float]
    e_u: float
    e_u_minus: float
    gap: float
    witness_state: PureState       # U_d* Psi* for the increase argmax Psi
    witness_delta: float           # delta_e(U_d, witness_state)
    witness_residual: float        # |witness_delta + e_u|
    increase: CapabilityResult
    decrease: CapabilityResult
