"""
Holevo information and the Pauli ensembles that turn a gate's entanglement
capability into communication.

Register: 4 qubits, Alice = {1, 2}, Bob = {3, 4}, the gate on (2, 3).

One-way ensemble, built on a state Psi that U_d disentangles by E_U:

    V_(i,i') = sigma_i'^(1) sigma_i^(2) sigma_i^(3) sigma_i'^(4),   p = 1/16

sigma_i (x) sigma_i on (2, 3) commutes with U_d, so every V Psi loses E_U
under U_d, while the Pauli twirl on Bob's qubits keeps his averaged reduced
state at I/4 before and after. Bob's Holevo quantity therefore grows by E_U.

Bidirectional ensemble: psi_ij = V_j V_i Psi (256 states, both indices
uniform). chi-> conditions on Bob's index j and measures what Bob learns
about i; chi<- conditions on i. Each grows by E_U.
"""
import logging
from functools import lru_cache
from typing import List, Sequence, Tuple, Union

import numpy as np

from app.models.ensemble import (
    BidirectionalEnsemble,
    BidirectionalGainReport,
    Ensemble,
    GainReport,
    StateEntropy,
)
from app.models.gate import CanonicalForm
from app.models.state import DensityMatrix, PureState
from app.services.canonical import u_d
from app.services.errors import DimensionMismatchError, InvalidEnsembleError
from app.services.qla import (
    PAULIS,
    apply_on_qubits,
    check_unitary,
    pauli_word,
    reduced_state,
    vn_entropy,
)

logger = logging.getLogger(__name__)

GATE_QUBITS = (2, 3)
PAULI_LABELS: Tuple[Tuple[int, int], ...] = tuple((i, ip) for i in range(4) for ip in range(4))


# ─────────────────────────────────────────────
# Holevo information
# ─────────────────────────────────────────────

def _average(probs: Sequence[float], rhos: Sequence[DensityMatrix]) -> DensityMatrix:
    m = sum(p * r.matrix for p, r in zip(probs, rhos))
    return DensityMatrix(matrix=0.5 * (m + m.conj().T))


def _chi(probs: Sequence[float], rhos: Sequence[DensityMatrix], entropies: Sequence[float]) -> Tuple[float, float, DensityMatrix]:
    avg = _average(probs, rhos)
    mean_entropy = float(np.dot(probs, entropies))
    chi = vn_entropy(avg) - mean_entropy
    return max(chi, 0.0), mean_entropy, avg


def holevo(pairs: Sequence[Tuple[float, DensityMatrix]]) -> float:
    """chi = S(sum_i p_i rho_i) - sum_i p_i S(rho_i), in bits."""
    if not pairs:
        raise InvalidEnsembleError("empty ensemble")
    probs = np.array([p for p, _ in pairs], dtype=float)
    if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
        raise InvalidEnsembleError(f"probabilities must be non-negative and sum to 1, got {probs.sum()!r}")
    rhos = [r for _, r in pairs]
    if len({r.dim for r in rhos}) != 1:
        raise DimensionMismatchError("ensemble states differ in dimension", module="ensembles")
    chi, _, _ = _chi(probs, rhos, [vn_entropy(r) for r in rhos])
    return chi


def twirl_check(rho: DensityMatrix) -> float:
    """|| 1/16 sum_(i,i') P rho P - Tr(rho) I/4 ||_F with P = sigma_i (x) sigma_i'."""
    if rho.dim != 4:
        raise DimensionMismatchError(f"twirl acts on two qubits, got dimension {rho.dim}", module="ensembles")
    acc = np.zeros((4, 4), dtype=np.complex128)
    for i, ip in PAULI_LABELS:
        p = np.kron(PAULIS[i], PAULIS[ip])
        acc += p @ rho.matrix @ p
    return float(np.linalg.norm(acc / 16.0 - np.trace(rho.matrix) * np.eye(4) / 4.0))


# ─────────────────────────────────────────────
# Constructive ensembles
# ─────────────────────────────────────────────

@lru_cache(maxsize=1)
def _pauli_operators() -> Tuple[np.ndarray, ...]:
    return tuple(
        pauli_word([(1, ip), (2, i), (3, i), (4, ip)], 4) for i, ip in PAULI_LABELS
    )


def _check_core_input(alphas: Sequence[float], psi: PureState) -> np.ndarray:
    if psi.num_qubits != 4:
        raise InvalidEnsembleError(f"expected a 4-qubit state, got {psi.num_qubits} qubits")
    return u_d(alphas)


def _act(op: np.ndarray, psi: PureState) -> PureState:
    return PureState(num_qubits=psi.num_qubits, amplitudes=op @ psi.amplitudes)


def build_one_way(alphas: Sequence[float], psi: PureState) -> Ensemble:
    """The 16 states V_(i,i') Psi with p = 1/16, labeled (i, i')."""
    _check_core_input(alphas, psi)
    states = tuple(_act(v, psi) for v in _pauli_operators())
    return Ensemble(
        probabilities=(1.0 / 16,) * 16,
        states=states,
        labels=PAULI_LABELS,
        constructive=True,
    )


def build_bidirectional(alphas: Sequence[float], psi: PureState) -> BidirectionalEnsemble:
    """psi_ij = V_j V_i Psi; rows are Alice's index i, columns Bob's index j."""
    _check_core_input(alphas, psi)
    ops = _pauli_operators()
    singles = [v @ psi.amplitudes for v in ops]
    grid = tuple(
        tuple(PureState(num_qubits=4, amplitudes=w @ singles[i]) for w in ops)
        for i in range(16)
    )
    return BidirectionalEnsemble(
        row_probs=(1.0 / 16,) * 16,
        col_probs=(1.0 / 16,) * 16,
        states=grid,
        row_labels=PAULI_LABELS,
        col_labels=PAULI_LABELS,
        constructive=True,
    )


def ordering_residual(psi: PureState) -> float:
    """max over (i, j) of 1 - |<V_j V_i Psi | V_i V_j Psi>|; the order only changes a sign."""
    ops = _pauli_operators()
    worst = 0.0
    for vi in ops:
        for vj in ops:
            a = vj @ (vi @ psi.amplitudes)
            b = vi @ (vj @ psi.amplitudes)
            worst = max(worst, 1.0 - abs(np.vdot(a, b)))
    return worst


def to_core_frame(psi: PureState, form: CanonicalForm) -> PureState:
    """(before_a (x) before_b) psi: a state for U becomes the matching state for U_d."""
    return apply_on_qubits(np.kron(form.before_a, form.before_b), psi, GATE_QUBITS)


def dress_for_gate(
    ensemble: Union[Ensemble, BidirectionalEnsemble], form: CanonicalForm
) -> Union[Ensemble, BidirectionalEnsemble]:
    """
    Move an ensemble built for U_d onto the gate U the form was taken from:
    every state is rotated by (before_a (x) before_b)^dag on (2, 3), so that
    U acting on it equals local unitaries times U_d acting on the original.
    """
    undo = np.kron(form.before_a, form.before_b).conj().T

    def move(psi: PureState) -> PureState:
        return apply_on_qubits(undo, psi, GATE_QUBITS)

    if isinstance(ensemble, BidirectionalEnsemble):
        grid = tuple(tuple(move(s) for s in row) for row in ensemble.states)
        return ensemble.model_copy(update={"states": grid})
    return ensemble.model_copy(update={"states": tuple(move(s) for s in ensemble.states)})


# ─────────────────────────────────────────────
# Gains
# ─────────────────────────────────────────────

class _Side:
    """Reduced states and entropies of one side for every state, before and after U."""

    def __init__(self, states: Sequence[PureState], after: Sequence[PureState], keep: Sequence[int]):
        self.before = [reduced_state(s, keep) for s in states]
        self.after = [reduced_state(s, keep) for s in after]
        self.entropy_before = [vn_entropy(r) for r in self.before]
        self.entropy_after = [vn_entropy(r) for r in self.after]


def _check_gate(u: np.ndarray) -> np.ndarray:
    u = check_unitary(u, module="ensembles")
    if u.shape != (4, 4):
        raise DimensionMismatchError(f"expected a 4x4 gate, got {u.shape}", module="ensembles")
    return u


def _maximally_mixed_distance(rho: DensityMatrix) -> float:
    return float(np.linalg.norm(rho.matrix - np.eye(rho.dim) / rho.dim))


def _conditioned_gain(
    groups: List[List[int]],
    probs: Sequence[float],
    weights: Sequence[float],
    side: _Side,
    labels: Sequence[Tuple[int, int]],
    flat_probs: Sequence[float],
) -> GainReport:
    """sum_g w_g chi(group g) before and after; groups index into the flat state list."""
    chi_b = chi_a = mean_b = mean_a = 0.0
    residual = 0.0
    for w, group in zip(weights, groups):
        eb = [side.entropy_before[k] for k in group]
        ea = [side.entropy_after[k] for k in group]
        cb, mb, avg_b = _chi(probs, [side.before[k] for k in group], eb)
        ca, ma, avg_a = _chi(probs, [side.after[k] for k in group], ea)
        chi_b += w * cb
        chi_a += w * ca
        mean_b += w * mb
        mean_a += w * ma
        residual = max(residual, _maximally_mixed_distance(avg_b), _maximally_mixed_distance(avg_a))
    table = [
        StateEntropy(
            label=labels[k],
            probability=float(flat_probs[k]),
            entropy_before=side.entropy_before[k],
            entropy_after=side.entropy_after[k],
        )
        for k in range(len(labels))
    ]
    return GainReport(
        chi_before=chi_b,
        chi_after=chi_a,
        gain=chi_a - chi_b,
        average_entropy_before=mean_b,
        average_entropy_after=mean_a,
        first_term_residual=residual,
        table=table,
    )


def gain_one_way(u: np.ndarray, ensemble: Ensemble) -> GainReport:
    """chi(Tr_A U E) - chi(Tr_A E): Bob's Holevo quantity before and after U on (2, 3)."""
    u = _check_gate(u)
    after = [apply_on_qubits(u, s, GATE_QUBITS) for s in ensemble.states]
    side = _Side(ensemble.states, after, ensemble.cut.side_b)
    labels = ensemble.labels or tuple((k, 0) for k in range(len(ensemble)))
    report = _conditioned_gain(
        [list(range(len(ensemble)))], ensemble.probabilities, [1.0], side, labels, ensemble.probabilities
    )
    logger.info(
        f"[Ensembles] one-way chi {report.chi_before:.9f} -> {report.chi_after:.9f} "
        f"(gain {report.gain:.9f})"
    )
    return report


def gain_bidirectional(u: np.ndarray, be: BidirectionalEnsemble) -> BidirectionalGainReport:
    """
    chi-> = sum_j q_j chi({p_i, Tr_A psi_ij})   (Bob learns i)
    chi<- = sum_i p_i chi({q_j, Tr_B psi_ij})   (Alice learns j)
    each evaluated before and after U.
    """
    u = _check_gate(u)
    n_rows, n_cols = len(be.row_probs), len(be.col_probs)
    flat = [be.states[i][j] for i in range(n_rows) for j in range(n_cols)]
    after = [apply_on_qubits(u, s, GATE_QUBITS) for s in flat]
    bob = _Side(flat, after, be.cut.side_b)
    alice = _Side(flat, after, be.cut.side_a)
    labels = [(i, j) for i in range(n_rows) for j in range(n_cols)]
    flat_probs = [be.row_probs[i] * be.col_probs[j] for i in range(n_rows) for j in range(n_cols)]

    forward = _conditioned_gain(
        [[i * n_cols + j for i in range(n_rows)] for j in range(n_cols)],
        be.row_probs, be.col_probs, bob, labels, flat_probs,
    )
    backward = _conditioned_gain(
        [[i * n_cols + j for j in range(n_cols)] for i in range(n_rows)],
        be.col_probs, be.row_probs, alice, labels, flat_probs,
    )
    both_before = forward.chi_before + backward.chi_before
    both_after = forward.chi_after + backward.chi_after
    logger.info(
        f"[Ensembles] bidirectional gains -> {forward.gain:.9f}, <- {backward.gain:.9f}"
    )
    return BidirectionalGainReport(
        forward=forward,
        backward=backward,
        total_gain=forward.gain + backward.gain,
        chi_both_before=both_before,
        chi_both_after=both_after,
        gap=both_after - both_before,
    )
