"""
Ensembles of shared pure states and their Holevo gain reports.
"""
from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from app.models.state import ALICE_BOB_CUT, Bipartition, PureState

PROB_TOL = 1e-12
GAP_LABEL = "conjecture-dependent"


def _check_probabilities(probs, what: str) -> None:
    p = np.asarray(probs, dtype=float)
    if p.size == 0:
        raise ValueError(f"{what}: empty probability list")
    if np.any(p < 0):
        raise ValueError(f"{what}: negative probability")
    if abs(p.sum() - 1.0) > PROB_TOL:
        raise ValueError(f"{what}: probabilities sum to {p.sum()!r}, not 1")


def _check_uniform(probs, what: str) -> None:
    p = np.asarray(probs, dtype=float)
    if np.max(np.abs(p - 1.0 / p.size)) > PROB_TOL:
        raise ValueError(f"{what}: constructive ensembles use uniform weights")


class Ensemble(BaseModel):
    """{p_i, |psi_i>} over the Alice|Bob cut."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    probabilities: Tuple[float, ...]
    states: Tuple[PureState, ...]
    labels: Tuple[Tuple[int, int], ...] = ()
    cut: Bipartition = ALICE_BOB_CUT
    constructive: bool = False

    @model_validator(mode="after")
    def _check(self):
        if len(self.probabilities) != len(self.states):
            raise ValueError("one probability per state")
        _check_probabilities(self.probabilities, "ensemble")
        if self.constructive:
            _check_uniform(self.probabilities, "ensemble")
        if len({s.num_qubits for s in self.states}) != 1:
            raise ValueError("ensemble states must share a qubit count")
        if self.states[0].num_qubits != self.cut.num_qubits:
            raise ValueError("cut does not match the ensemble states")
        if self.labels and len(self.labels) != len(self.states):
            raise ValueError("one label per state")
        return self

    def __len__(self) -> int:
        return len(self.states)


class BidirectionalEnsemble(BaseModel):
    """
    {p_i q_j, |psi_ij>}: i indexes the row (Alice's message), j the column
    (Bob's message). states[i][j] is psi_ij.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    row_probs: Tuple[float, ...]
    col_probs: Tuple[float, ...]
    states: Tuple[Tuple[PureState, ...], ...]
    row_labels: Tuple[Tuple[int, int], ...] = ()
    col_labels: Tuple[Tuple[int, int], ...] = ()
    cut: Bipartition = ALICE_BOB_CUT
    constructive: bool = False

    @model_validator(mode="after")
    def _check(self):
        _check_probabilities(self.row_probs, "row")
        _check_probabilities(self.col_probs, "column")
        if self.constructive:
            _check_uniform(self.row_probs, "row")
            _check_uniform(self.col_probs, "column")
        if len(self.states) != len(self.row_probs) or any(
            len(row) != len(self.col_probs) for row in self.states
        ):
            raise ValueError("state grid is incomplete")
        return self


class StateEntropy(BaseModel):
    label: Tuple[int, int]
    probability: float
    entropy_before: float
    entropy_after: float


class GainReport(BaseModel):
    """chi of the receiver's reduced ensemble before and after the gate."""

    chi_before: float
    chi_after: float
    gain: float
    average_entropy_before: float
    average_entropy_after: float
    first_term_residual: float        # max distance of the averaged state from I/dim
    table: List[StateEntropy] = []


class BidirectionalGainReport(BaseModel):
    forward: GainReport               # chi->, Bob learns Alice's index, averaged over Bob's
    backward: GainReport              # chi<-, Alice learns Bob's index, averaged over Alice's
    total_gain: float
    chi_both_before: float
    chi_both_after: float
    gap: float
    gap_label: str = GAP_LABEL
