"""
Gate specifications and canonical-form results.
"""
from typing import List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

GateName = Literal["CNOT", "CZ", "SWAP", "ISWAP", "IDENTITY"]

# Reported alongside every set of canonical parameters.
WEYL_CONVENTION = (
    "U = phase * (after_a (x) after_b) * exp(-i sum_k alpha_k sigma_k (x) sigma_k) "
    "* (before_a (x) before_b); representative pi/4 >= alpha_1 >= alpha_2 >= |alpha_3|, "
    "alpha_3 >= 0 when alpha_1 = pi/4"
)


class GateSpec(BaseModel):
    """Exactly one of name / matrix / canonical."""

    model_config = ConfigDict(extra="forbid")

    name: Optional[GateName] = None
    matrix: Optional[List[List[Tuple[float, float]]]] = Field(
        default=None, description="4x4 matrix, entries as [re, im] pairs"
    )
    canonical: Optional[Tuple[float, float, float]] = None

    @model_validator(mode="after")
    def _exactly_one(self):
        given = [k for k in ("name", "matrix", "canonical") if getattr(self, k) is not None]
        if len(given) != 1:
            raise ValueError(
                f"gate spec needs exactly one of name, matrix, canonical; got {given or 'none'}"
            )
        if self.matrix is not None:
            if len(self.matrix) != 4 or any(len(row) != 4 for row in self.matrix):
                raise ValueError("matrix must be 4x4")
        if self.canonical is not None and not all(np.isfinite(self.canonical)):
            raise ValueError("canonical parameters must be finite")
        return self

    @property
    def kind(self) -> str:
        if self.name is not None:
            return "name"
        return "matrix" if self.matrix is not None else "canonical"

    def matrix_array(self) -> Optional[np.ndarray]:
        if self.matrix is None:
            return None
        return np.array([[complex(re, im) for re, im in row] for row in self.matrix])


class CanonicalForm(BaseModel):
    """
    U = global_phase * (after_a (x) after_b) * U_d(alphas) * (before_a (x) before_b).

    The local factors are in SU(2).
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    alphas: Tuple[float, float, float]
    before_a: np.ndarray
    before_b: np.ndarray
    after_a: np.ndarray
    after_b: np.ndarray
    global_phase: complex
    residual: float = 0.0
    convention: str = WEYL_CONVENTION


class ConjugationReport(BaseModel):
    alphas: Tuple[float, float, float]
    conjugate_residual: float      # ||U_d* - U_d^dag||_F
    unitarity_residual: float      # ||U_d U_d^dag - I||_F
    commutation_residual: float    # max_k ||[U_d, sigma_k (x) sigma_k]||_F

    @property
    def max_residual(self) -> float:
        return max(self.conjugate_residual, self.unitarity_residual)
