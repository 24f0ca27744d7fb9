"""
Entanglement capability of a two-qubit gate.

Register: four qubits, Alice = {1, 2}, Bob = {3, 4}; the gate acts on (2, 3).

    delta_e(U, psi) = E(U psi) - E(psi)        across {1,2}|{3,4}
    E_U   = max_psi  delta_e(U, psi)           direction "increase"
    E_U^- = max_psi -delta_e(U, psi)           direction "decrease"

The search runs gradient ascent from many seeded starting points at once.
A state is 32 reals v, psi = v / |v|; gradients are central differences in
those 32 coordinates and every restart carries its own backtracking step.
Restart r draws from seed + r, so results do not depend on evaluation order.
"""
import logging
from typing import Optional

import numpy as np

from app.models.capability import (
    CapabilityResult,
    Direction,
    OptimizerConfig,
    OracleResult,
    RestartTrace,
    SymmetryReport,
)
from app.models.state import ALICE_BOB_CUT, PureState
from app.services.canonical import decompose, u_d
from app.services.errors import DimensionMismatchError
from app.services.qla import (
    apply_batch,
    apply_on_qubits,
    batch_entanglement,
    check_unitary,
    entanglement_entropy,
    random_amplitudes,
)

logger = logging.getLogger(__name__)

GATE_QUBITS = (2, 3)
NUM_QUBITS = 4
DIM = 2 ** NUM_QUBITS

ARMIJO_C = 1e-4
MAX_HALVINGS = 40
INITIAL_STEP = 0.1
PLATEAU_DELTA = 1e-9
PLATEAU_KICK = 1e-4
MAX_KICKS = 3
ORACLE_CHUNK = 50_000


def _check_gate(u: np.ndarray) -> np.ndarray:
    u = check_unitary(u)
    if u.shape != (4, 4):
        raise DimensionMismatchError(f"expected a 4x4 gate, got {u.shape}")
    return u


def delta_e(u: np.ndarray, psi: PureState) -> float:
    """E(U psi) - E(psi) with U on qubits (2, 3), in ebits."""
    u = _check_gate(u)
    if psi.num_qubits != NUM_QUBITS:
        raise DimensionMismatchError(f"expected a 4-qubit state, got {psi.num_qubits} qubits")
    after = apply_on_qubits(u, psi, GATE_QUBITS)
    return entanglement_entropy(after, ALICE_BOB_CUT) - entanglement_entropy(psi, ALICE_BOB_CUT)


# ─────────────────────────────────────────────
# Batched objective
# ─────────────────────────────────────────────

def _batch_delta(u: np.ndarray, amps: np.ndarray) -> np.ndarray:
    after = apply_batch(u, amps, GATE_QUBITS, NUM_QUBITS)
    return batch_entanglement(after, 2) - batch_entanglement(amps, 2)


def _to_amplitudes(x: np.ndarray) -> np.ndarray:
    z = x[..., :DIM] + 1j * x[..., DIM:]
    return z / np.linalg.norm(z, axis=-1, keepdims=True)


def _normalize(x: np.ndarray) -> np.ndarray:
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


class _Objective:
    def __init__(self, u: np.ndarray, sign: float, h: float):
        self.u = u
        self.sign = sign
        self.h = h
        self._offsets = np.vstack([np.eye(2 * DIM), -np.eye(2 * DIM)]) * h

    def __call__(self, x: np.ndarray) -> np.ndarray:
        flat = x.reshape(-1, 2 * DIM)
        vals = self.sign * _batch_delta(self.u, _to_amplitudes(flat))
        return vals.reshape(x.shape[:-1])

    def gradient(self, x: np.ndarray) -> np.ndarray:
        # (R, 64, 32): +h e_i for i < 32, then -h e_i
        probes = x[:, None, :] + self._offsets[None, :, :]
        f = self(probes)
        n = 2 * DIM
        return (f[:, :n] - f[:, n:]) / (2.0 * self.h)


# ─────────────────────────────────────────────
# Capability
# ─────────────────────────────────────────────

def capability(
    u: np.ndarray,
    direction: Direction = "increase",
    config: Optional[OptimizerConfig] = None,
) -> CapabilityResult:
    """
    Maximal increase (or decrease) of entanglement from one use of u.

    Never raises on non-convergence: the best point found is returned with
    converged=False.
    """
    u = _check_gate(u)
    cfg = config or OptimizerConfig()
    sign = 1.0 if direction == "increase" else -1.0
    objective = _Objective(u, sign, cfg.fd_step)

    r = cfg.restarts
    rngs = [np.random.default_rng(cfg.seed + k) for k in range(r)]
    x = _normalize(np.stack([g.standard_normal(2 * DIM) for g in rngs]))
    f = objective(x)
    step = np.full(r, INITIAL_STEP)
    best_x, best_f = x.copy(), f.copy()
    iterations = np.zeros(r, dtype=int)
    kicks = np.zeros(r, dtype=int)
    grad_norm = np.full(r, np.inf)
    active = np.ones(r, dtype=bool)

    for _ in range(cfg.max_iters):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        g = objective.gradient(x[idx])
        gn = np.linalg.norm(g, axis=1)
        grad_norm[idx] = gn
        done = gn < cfg.grad_tol
        active[idx[done]] = False
        idx, g, gn = idx[~done], g[~done], gn[~done]
        if idx.size == 0:
            break
        iterations[idx] += 1

        # backtracking line search, all restarts in lockstep
        eta = step[idx].copy()
        accepted = np.zeros(idx.size, dtype=bool)
        new_x = x[idx].copy()
        new_f = f[idx].copy()
        for _ in range(MAX_HALVINGS):
            todo = ~accepted
            if not todo.any():
                break
            cand = _normalize(x[idx[todo]] + eta[todo, None] * g[todo])
            fc = objective(cand)
            ok = fc >= f[idx[todo]] + ARMIJO_C * eta[todo] * gn[todo] ** 2
            rows = np.flatnonzero(todo)[ok]
            new_x[rows] = cand[ok]
            new_f[rows] = fc[ok]
            accepted[rows] = True
            eta[todo & ~accepted] *= 0.5

        change = np.abs(new_f - f[idx])
        x[idx], f[idx] = new_x, new_f
        step[idx] = np.where(accepted, eta * 2.0, INITIAL_STEP)

        better = f[idx] > best_f[idx]
        best_f[idx[better]] = f[idx[better]]
        best_x[idx[better]] = x[idx[better]]

        # flat objective with a non-vanishing gradient: nudge off the plateau
        stuck = (change < PLATEAU_DELTA) & (kicks[idx] < MAX_KICKS)
        for row in np.flatnonzero(stuck):
            k = idx[row]
            kick = rngs[k].standard_normal(2 * DIM)
            x[k] = _normalize(x[k] + PLATEAU_KICK * kick / np.linalg.norm(kick))
            f[k] = objective(x[k][None, :])[0]
            kicks[k] += 1

    converged = grad_norm < cfg.grad_tol
    winner = int(np.argmax(best_f))
    psi = PureState(num_qubits=NUM_QUBITS, amplitudes=_to_amplitudes(best_x[winner]))
    value = sign * delta_e(u, psi)

    traces = [
        RestartTrace(
            restart=k,
            seed=cfg.seed + k,
            value=float(best_f[k]),
            iterations=int(iterations[k]),
            grad_norm=float(grad_norm[k]),
            perturbations=int(kicks[k]),
            converged=bool(converged[k]),
        )
        for k in range(r)
    ]
    logger.info(
        f"[EntCap] {direction}: value={value:.9f} best_restart={winner} "
        f"converged={int(converged.sum())}/{r}"
    )
    return CapabilityResult(
        value=float(value),
        argmax_state=psi,
        direction=direction,
        restarts_used=r,
        converged=bool(converged[winner]),
        seed=cfg.seed,
        best_restart=winner,
        traces=traces,
    )


def random_search(
    u: np.ndarray,
    direction: Direction = "increase",
    samples: int = 1_000_000,
    seed: int = 0,
) -> OracleResult:
    """Best +-delta_e over Haar-random states; a lower bound for capability()."""
    u = _check_gate(u)
    sign = 1.0 if direction == "increase" else -1.0
    rng = np.random.default_rng(seed)
    best_val = -np.inf
    best_amps: Optional[np.ndarray] = None
    remaining = samples
    while remaining > 0:
        n = min(ORACLE_CHUNK, remaining)
        amps = random_amplitudes(NUM_QUBITS, rng, batch=n)
        vals = sign * _batch_delta(u, amps)
        k = int(np.argmax(vals))
        if vals[k] > best_val:
            best_val, best_amps = float(vals[k]), amps[k]
        remaining -= n
    if best_amps is None:
        return OracleResult(value=0.0, samples=0, seed=seed, direction=direction)
    logger.debug(f"[EntCap] random search {direction}: {best_val:.6f} over {samples} samples")
    return OracleResult(
        value=best_val,
        best_state=PureState(num_qubits=NUM_QUBITS, amplitudes=best_amps),
        samples=samples,
        seed=seed,
        direction=direction,
    )


def symmetry_check(u: np.ndarray, config: Optional[OptimizerConfig] = None) -> SymmetryReport:
    """
    E_U versus E_U^- on the canonical core of u.

    For the increase argmax Psi, U_d* Psi* loses exactly E_U under U_d:
    E(U_d U_d* Psi*) = E(Psi) and E(U_d* Psi*) = E(U_d Psi).
    """
    alphas = decompose(u).alphas
    core = u_d(alphas)
    up = capability(core, "increase", config)
    down = capability(core, "decrease", config)
    witness = conjugate_witness(core, up)
    witness_delta = delta_e(core, witness)
    return SymmetryReport(
        alphas=alphas,
        e_u=up.value,
        e_u_minus=down.value,
        gap=abs(up.value - down.value),
        witness_state=witness,
        witness_delta=witness_delta,
        witness_residual=abs(witness_delta + up.value),
        increase=up,
        decrease=down,
    )


def conjugate_witness(core: np.ndarray, increase: CapabilityResult) -> PureState:
    """U_d* Psi* for the argmax Psi of an increase run on the canonical core."""
    return apply_on_qubits(core.conj(), increase.argmax_state.conjugate(), GATE_QUBITS)
