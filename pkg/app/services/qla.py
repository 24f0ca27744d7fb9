"""
Dense complex linear algebra core.

Responsibilities:
- Kronecker products and Pauli words on labeled qubits
- Gate application on an ordered list of target qubits
- Partial traces (from density matrices, or directly from amplitudes)
- Hermitian eigendecomposition by cyclic Jacobi rotations
- von Neumann entropy, entropy of entanglement, Schmidt decomposition
- Batched entanglement evaluation for the capability optimizer

Conventions:
- Qubit labels are 1-based; qubit 1 is the most significant index bit.
- Every entropy is in base 2 (bits / ebits).
- Eigenvalues in [-1e-10, 1e-12) are clamped to 0 before entropies are taken;
  anything more negative is reported as an EigenSolverError.
"""
import logging
from typing import Iterable, List, Sequence, Tuple

import numpy as np
from scipy.stats import unitary_group

from app.models.state import Bipartition, DensityMatrix, PureState, SchmidtDecomposition
from app.services.errors import (
    DimensionMismatchError,
    EigenSolverError,
    InvalidPauliError,
    NonUnitaryError,
    QubitIndexError,
)

logger = logging.getLogger(__name__)

# ─────────────────────────────────────────────
# Constants
# ─────────────────────────────────────────────

UNITARY_TOL = 1e-10
JACOBI_TOL = 1e-14
JACOBI_MAX_SWEEPS = 100
CLAMP_ZERO = 1e-12
CLAMP_NEGATIVE = -1e-10
SCHMIDT_CUTOFF = 1e-12

I2 = np.eye(2, dtype=np.complex128)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)

# sigma_0 .. sigma_3
PAULIS: Tuple[np.ndarray, ...] = (I2, SIGMA_X, SIGMA_Y, SIGMA_Z)

for _p in PAULIS:
    _p.setflags(write=False)


# ─────────────────────────────────────────────
# Helpers
# ─────────────────────────────────────────────

def _check_finite(m: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(m)):
        raise DimensionMismatchError(f"{what} has non-finite entries")


def _check_labels(labels: Iterable[int], num_qubits: int, allow_empty: bool = False) -> List[int]:
    out = [int(q) for q in labels]
    if not out and not allow_empty:
        raise QubitIndexError("qubit set must not be empty")
    if len(set(out)) != len(out):
        raise QubitIndexError(f"qubit labels collide: {out}")
    bad = [q for q in out if q < 1 or q > num_qubits]
    if bad:
        raise QubitIndexError(f"qubit labels {bad} out of range 1..{num_qubits}")
    return out


def check_unitary(u: np.ndarray, atol: float = UNITARY_TOL, module: str = "qla") -> np.ndarray:
    """Return `u` as a complex array, or raise NonUnitaryError."""
    arr = np.asarray(u, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise NonUnitaryError(f"expected a square matrix, got shape {arr.shape}", module=module)
    _check_finite(arr, "matrix")
    residual = np.linalg.norm(arr @ arr.conj().T - np.eye(arr.shape[0]))
    if residual >= atol:
        raise NonUnitaryError(
            f"matrix is not unitary: ||U U^dag - I||_F = {residual:.3e} (tolerance {atol:g})",
            module=module,
        )
    return arr


# ─────────────────────────────────────────────
# Tensor products and Pauli words
# ─────────────────────────────────────────────

def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product a (x) b; a acts on the more significant qubits."""
    a = np.atleast_2d(np.asarray(a, dtype=np.complex128))
    b = np.atleast_2d(np.asarray(b, dtype=np.complex128))
    _check_finite(a, "left factor")
    _check_finite(b, "right factor")
    return np.kron(a, b)


def tensor_all(*factors: np.ndarray) -> np.ndarray:
    out = np.ones((1, 1), dtype=np.complex128)
    for f in factors:
        out = tensor(out, f)
    return out


def pauli_word(indices: Sequence[Tuple[int, int]], num_qubits: int = 0) -> np.ndarray:
    """
    Product of sigma_k on the given qubits, identity elsewhere.

    indices: (qubit, k) pairs with k in {0, 1, 2, 3}.
    num_qubits: register size; defaults to the largest label used.
    """
    pairs = [(int(q), int(k)) for q, k in indices]
    for _, k in pairs:
        if k not in (0, 1, 2, 3):
            raise InvalidPauliError(f"Pauli index must be in {{0,1,2,3}}, got {k}")
    n = num_qubits or max((q for q, _ in pairs), default=1)
    _check_labels([q for q, _ in pairs], n, allow_empty=True)
    on = dict(pairs)
    return tensor_all(*(PAULIS[on.get(q, 0)] for q in range(1, n + 1)))


# ─────────────────────────────────────────────
# Gate application
# ─────────────────────────────────────────────

def _apply_tensor(u: np.ndarray, t: np.ndarray, axes: List[int]) -> np.ndarray:
    k = len(axes)
    ut = u.reshape((2,) * (2 * k))
    out = np.tensordot(ut, t, axes=(list(range(k, 2 * k)), axes))
    return np.moveaxis(out, list(range(k)), axes)


def apply_on_qubits(u: np.ndarray, psi: PureState, targets: Sequence[int]) -> PureState:
    """Apply u to `targets` of psi; targets[0] is u's most significant qubit."""
    u = check_unitary(u)
    labels = _check_labels(targets, psi.num_qubits)
    if u.shape[0] != 2 ** len(labels):
        raise DimensionMismatchError(
            f"{u.shape[0]}x{u.shape[0]} gate cannot act on {len(labels)} qubit(s)"
        )
    out = _apply_tensor(u, psi.tensor(), [q - 1 for q in labels])
    return PureState(num_qubits=psi.num_qubits, amplitudes=out.reshape(-1))


def apply_batch(u: np.ndarray, amplitudes: np.ndarray, targets: Sequence[int], num_qubits: int) -> np.ndarray:
    """Apply u to every row of an (N, 2^n) amplitude array. No validation (hot path)."""
    batch = amplitudes.shape[0]
    t = amplitudes.reshape((batch,) + (2,) * num_qubits)
    out = _apply_tensor(u, t, [q for q in targets])  # axis 0 is the batch, so label q is axis q
    return out.reshape(batch, -1)


# ─────────────────────────────────────────────
# Partial traces
# ─────────────────────────────────────────────

def partial_trace(rho: DensityMatrix, keep: Iterable[int]) -> DensityMatrix:
    """Trace out every qubit not in `keep`; kept qubits stay in ascending order."""
    n = rho.num_qubits
    kept = sorted(_check_labels(keep, n))
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    rows = list(letters[:n])
    cols = list(letters[n:2 * n])
    for q in range(1, n + 1):
        if q not in kept:
            cols[q - 1] = rows[q - 1]
    out_idx = "".join(rows[q - 1] for q in kept) + "".join(cols[q - 1] for q in kept)
    t = rho.matrix.reshape((2,) * (2 * n))
    reduced = np.einsum(f"{''.join(rows)}{''.join(cols)}->{out_idx}", t)
    dim = 2 ** len(kept)
    m = reduced.reshape(dim, dim)
    return DensityMatrix(matrix=0.5 * (m + m.conj().T))


def reduced_state(psi: PureState, keep: Iterable[int]) -> DensityMatrix:
    """Reduced density matrix of a pure state, without forming |psi><psi|."""
    n = psi.num_qubits
    kept = sorted(_check_labels(keep, n))
    rest = [q for q in range(1, n + 1) if q not in kept]
    t = np.transpose(psi.tensor(), [q - 1 for q in kept + rest])
    m = t.reshape(2 ** len(kept), -1)
    rho = m @ m.conj().T
    return DensityMatrix(matrix=0.5 * (rho + rho.conj().T))


# ─────────────────────────────────────────────
# Jacobi eigensolver
# ─────────────────────────────────────────────

def jacobi_eigh(
    h: np.ndarray,
    tol: float = JACOBI_TOL,
    max_sweeps: int = JACOBI_MAX_SWEEPS,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Each rotation first removes the phase of a[p, q] (so the pivot is real)
    and then applies the real symmetric Jacobi rotation to the (p, q) plane.
    Sweeps stop once the off-diagonal Frobenius norm drops below
    tol * max(1, ||h||_F).

    Returns (eigenvalues ascending, eigenvectors as columns).
    """
    a = np.array(h, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {a.shape}")
    _check_finite(a, "matrix")
    n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)
    threshold = tol * max(1.0, float(np.linalg.norm(a)))

    for sweep in range(max_sweeps + 1):
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off < threshold:
            values = np.real(np.diag(a))
            order = np.argsort(values, kind="stable")
            return values[order], v[:, order]
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag < 1e-300:
                    continue
                phase = apq / mag
                theta = 0.5 * np.arctan2(2.0 * mag, a[q, q].real - a[p, p].real)
                c, s = np.cos(theta), np.sin(theta)
                rot = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ rot
                a[idx, :] = rot.conj().T @ a[idx, :]
                v[:, idx] = v[:, idx] @ rot
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real

    raise EigenSolverError(
        f"Jacobi eigensolver did not converge in {max_sweeps} sweeps (off-diagonal norm {off:.3e})"
    )


def clamp_spectrum(values: np.ndarray) -> np.ndarray:
    """Zero eigenvalues in [-1e-10, 1e-12); reject anything more negative."""
    values = np.asarray(values, dtype=float)
    if values.size and values.min() < CLAMP_NEGATIVE:
        raise EigenSolverError(
            f"eigenvalue {values.min():.3e} below {CLAMP_NEGATIVE:g}: not a valid density matrix"
        )
    return np.where(values < CLAMP_ZERO, 0.0, values)


def entropy_of_spectrum(values: np.ndarray) -> float:
    lam = clamp_spectrum(values)
    nz = lam[lam > 0]
    return float(-np.sum(nz * np.log2(nz)))


# ─────────────────────────────────────────────
# Entropies
# ─────────────────────────────────────────────

def vn_entropy(rho: DensityMatrix) -> float:
    """S(rho) = -Tr(rho log2 rho), in bits."""
    values, _ = jacobi_eigh(rho.matrix)
    s = entropy_of_spectrum(values)
    return min(max(s, 0.0), float(rho.num_qubits))


def entanglement_entropy(psi: PureState, cut: Bipartition) -> float:
    """Entropy of entanglement of psi across `cut`, in ebits."""
    if cut.num_qubits != psi.num_qubits:
        raise QubitIndexError(
            f"cut covers {cut.num_qubits} qubits but the state has {psi.num_qubits}"
        )
    # both sides give the same entropy; diagonalize the smaller reduced state
    keep = cut.side_a if len(cut.side_a) <= len(cut.side_b) else cut.side_b
    return vn_entropy(reduced_state(psi, keep))


def batch_entanglement(amplitudes: np.ndarray, qubits_a: int) -> np.ndarray:
    """
    Entropies of entanglement of many states across the cut that puts the
    leading `qubits_a` qubits on side A. Schmidt spectra come from a batched
    SVD; clamping follows clamp_spectrum.
    """
    batch, dim = amplitudes.shape
    da = 2 ** qubits_a
    m = amplitudes.reshape(batch, da, dim // da)
    s = np.linalg.svd(m, compute_uv=False)
    lam = s * s
    lam = np.where(lam < CLAMP_ZERO, 0.0, lam)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(lam > 0, lam * np.log2(np.where(lam > 0, lam, 1.0)), 0.0)
    return -terms.sum(axis=1)


def probability_entropy(p: np.ndarray) -> float:
    p = np.asarray(p, dtype=float).ravel()
    p = p[p > CLAMP_ZERO]
    return float(-np.sum(p * np.log2(p)))


# ─────────────────────────────────────────────
# Schmidt decomposition
# ─────────────────────────────────────────────

def _amplitude_matrix(psi: PureState, cut: Bipartition) -> np.ndarray:
    if cut.num_qubits != psi.num_qubits:
        raise QubitIndexError(
            f"cut covers {cut.num_qubits} qubits but the state has {psi.num_qubits}"
        )
    order = [q - 1 for q in list(cut.side_a) + list(cut.side_b)]
    t = np.transpose(psi.tensor(), order)
    return t.reshape(2 ** len(cut.side_a), 2 ** len(cut.side_b))


def schmidt(psi: PureState, cut: Bipartition) -> SchmidtDecomposition:
    """Schmidt coefficients (descending, zero terms dropped) and bases across `cut`."""
    m = _amplitude_matrix(psi, cut)
    u, s, vh = np.linalg.svd(m)
    rank = max(1, int(np.sum(s > SCHMIDT_CUTOFF)))
    return SchmidtDecomposition(
        cut=cut,
        coefficients=tuple(float(x) for x in s[:rank]),
        basis_a=u[:, :rank],
        basis_b=vh[:rank, :].T,
    )


def schmidt_entropy(psi: PureState, cut: Bipartition) -> float:
    """Entropy of entanglement from the Schmidt spectrum; for registers too wide for Jacobi."""
    s = np.linalg.svd(_amplitude_matrix(psi, cut), compute_uv=False)
    return entropy_of_spectrum(s * s)


def schmidt_mutual_information(psi: PureState, cut: Bipartition) -> float:
    """
    Mutual information between the outcomes of measuring side A in its
    Schmidt basis and side B in its Schmidt basis. Equals the entropy of
    entanglement: the outcome records are identical.
    """
    m = _amplitude_matrix(psi, cut)
    u, _, vh = np.linalg.svd(m)
    joint = np.abs(u.conj().T @ m @ vh.conj().T) ** 2
    return (
        probability_entropy(joint.sum(axis=1))
        + probability_entropy(joint.sum(axis=0))
        - probability_entropy(joint)
    )


# ─────────────────────────────────────────────
# Random draws (tests, oracles, optimizer starts)
# ─────────────────────────────────────────────

def random_amplitudes(num_qubits: int, rng: np.random.Generator, batch: int = 1) -> np.ndarray:
    z = rng.standard_normal((batch, 2 ** num_qubits)) + 1j * rng.standard_normal((batch, 2 ** num_qubits))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def random_state(num_qubits: int, rng: np.random.Generator) -> PureState:
    return PureState(num_qubits=num_qubits, amplitudes=random_amplitudes(num_qubits, rng)[0])


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary."""
    return np.asarray(unitary_group.rvs(dim, random_state=rng), dtype=np.complex128)
