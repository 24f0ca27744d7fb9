"""
Canonical nonlocal form of two-qubit gates.

Every U in U(4) is written as

    U = phase * (A1 (x) B1) * U_d(alpha) * (A2 (x) B2)
    U_d(alpha) = exp(-i (a1 XX + a2 YY + a3 ZZ))

with A*, B* in SU(2) and alpha in the chamber pi/4 >= a1 >= a2 >= |a3|
(a3 >= 0 whenever a1 = pi/4).

Algorithm:
  1. Normalize to SU(4): V = U / det(U)^(1/4), principal root.
  2. Move to the magic basis M: V' = M^dag V M. Local gates become real
     orthogonal matrices there and U_d becomes diagonal.
  3. V'^T V' = P D^2 P^T with P real orthogonal. Its real and imaginary
     parts commute, so P comes from the Jacobi solver applied to
     Re + t Im for a seeded t; a second t is tried before giving up.
  4. K1 = V' P D^-1 is real orthogonal; signs are fixed so det K1 = det P = 1.
  5. The phases of D give the global phase and alpha; M K1 M^dag and
     M P^T M^dag are split into single-qubit factors.
  6. A finite set of shifts, sign flips and axis swaps (each absorbed into
     the local factors) moves alpha into the chamber.
  7. The result is rebuilt and compared with U.

Magic basis, columns Phi+, i Psi+, Psi-, i Phi-:

    M = 1/sqrt(2) * [[1, 0,  0,  i],
                     [0, i,  1,  0],
                     [0, i, -1,  0],
                     [1, 0,  0, -i]]
"""
import logging
from typing import Dict, Sequence, Tuple

import numpy as np

from app.models.gate import CanonicalForm, ConjugationReport, GateSpec
from app.services.errors import DecompositionError, DimensionMismatchError
from app.services.qla import PAULIS, check_unitary, jacobi_eigh

logger = logging.getLogger(__name__)

# ─────────────────────────────────────────────
# Constants
# ─────────────────────────────────────────────

RECONSTRUCTION_TOL = 1e-9
CHAMBER_TOL = 1e-9
DIAGONAL_TOL = 1e-9
SNAP_TOL = 1e-12
DEGENERACY_SEED = 1729

_S2 = 1.0 / np.sqrt(2.0)

MAGIC = _S2 * np.array(
    [
        [1, 0, 0, 1j],
        [0, 1j, 1, 0],
        [0, 1j, -1, 0],
        [1, 0, 0, -1j],
    ],
    dtype=np.complex128,
)
MAGIC.setflags(write=False)

# Eigenvalues of (XX, YY, ZZ) on each magic column.
_MAGIC_CHARACTERS = np.array(
    [
        [1, -1, 1],
        [1, 1, -1],
        [-1, -1, -1],
        [-1, 1, 1],
    ],
    dtype=float,
)
# phase_j = w - sum_k alpha_k c_jk   =>   [w, a1, a2, a3] = G^T phase / 4
_PHASE_MAP = np.hstack([np.ones((4, 1)), -_MAGIC_CHARACTERS])

_SIGMA_PAIRS = tuple(np.kron(PAULIS[k], PAULIS[k]) for k in (1, 2, 3))

NAMED_GATES: Dict[str, np.ndarray] = {
    "IDENTITY": np.eye(4, dtype=np.complex128),
    "CNOT": np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128
    ),
    "CZ": np.diag([1, 1, 1, -1]).astype(np.complex128),
    "SWAP": np.array(
        [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=np.complex128
    ),
    "ISWAP": np.array(
        [[1, 0, 0, 0], [0, 0, 1j, 0], [0, 1j, 0, 0], [0, 0, 0, 1]], dtype=np.complex128
    ),
}
for _g in NAMED_GATES.values():
    _g.setflags(write=False)


def magic_basis() -> np.ndarray:
    return MAGIC.copy()


# ─────────────────────────────────────────────
# U_d and its identities
# ─────────────────────────────────────────────

def u_d(alphas: Sequence[float]) -> np.ndarray:
    """exp(-i sum_k alpha_k sigma_k (x) sigma_k); the three terms commute."""
    a = [float(x) for x in alphas]
    if len(a) != 3 or not np.all(np.isfinite(a)):
        raise DimensionMismatchError("alphas must be three finite reals", module="canonical")
    out = np.eye(4, dtype=np.complex128)
    for alpha, ss in zip(a, _SIGMA_PAIRS):
        out = out @ (np.cos(alpha) * np.eye(4) - 1j * np.sin(alpha) * ss)
    return out


def conjugation_check(alphas: Sequence[float]) -> ConjugationReport:
    """Residuals of U_d* = U_d^dag, U_d U_d^dag = I and [U_d, sigma_k sigma_k] = 0."""
    ud = u_d(alphas)
    ud_dag = ud.conj().T
    commutators = [np.linalg.norm(ud @ ss - ss @ ud) for ss in _SIGMA_PAIRS]
    return ConjugationReport(
        alphas=tuple(float(x) for x in alphas),
        conjugate_residual=float(np.linalg.norm(ud.conj() - ud_dag)),
        unitarity_residual=float(np.linalg.norm(ud @ ud_dag - np.eye(4))),
        commutation_residual=float(max(commutators)),
    )


def reconstruct(form: CanonicalForm) -> np.ndarray:
    after = np.kron(form.after_a, form.after_b)
    before = np.kron(form.before_a, form.before_b)
    return form.global_phase * after @ u_d(form.alphas) @ before


def gate_matrix(spec: GateSpec) -> np.ndarray:
    if spec.name is not None:
        return NAMED_GATES[spec.name].copy()
    if spec.canonical is not None:
        return u_d(spec.canonical)
    return check_unitary(spec.matrix_array(), module="cli")


# ─────────────────────────────────────────────
# Decomposition helpers
# ─────────────────────────────────────────────

def _diagonalize_complex_symmetric(s: np.ndarray, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Real orthogonal P with P^T s P diagonal, for complex symmetric normal s."""
    re = 0.5 * (s.real + s.real.T)
    im = 0.5 * (s.imag + s.imag.T)
    scale = max(1.0, float(np.linalg.norm(s)))
    for attempt in range(2):
        t = float(rng.uniform(0.5, 2.0))
        _, vecs = jacobi_eigh(re + t * im)
        p = vecs.real
        off = 0.0
        for part in (re, im):
            d = p.T @ part @ p
            off = max(off, float(np.linalg.norm(d - np.diag(np.diag(d)))))
        if off < DIAGONAL_TOL * scale:
            return p, np.diag(p.T @ s @ p)
        logger.debug(f"[Canonical] direction t={t:.6f} left off-diagonal {off:.3e}; retrying")
    raise DecompositionError(
        f"could not simultaneously diagonalize the magic-basis square (off-diagonal {off:.3e})"
    )


def _kron_factor(k: np.ndarray) -> Tuple[complex, np.ndarray, np.ndarray]:
    """Split k = g * (a (x) b) with a, b in SU(2)."""
    # K[(i,j),(k,l)] = a[i,k] b[j,l]  ->  R[(i,k),(j,l)] = vec(a) vec(b)^T
    r = k.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)
    u, s, vh = np.linalg.svd(r)
    a = np.sqrt(s[0]) * u[:, 0].reshape(2, 2)
    b = np.sqrt(s[0]) * vh[0, :].reshape(2, 2)
    a = a / np.sqrt(np.linalg.det(a))
    b = b / np.sqrt(np.linalg.det(b))
    ab = np.kron(a, b)
    idx = np.unravel_index(np.argmax(np.abs(k)), k.shape)
    g = complex(k[idx] / ab[idx])
    if np.linalg.norm(k - g * ab) > 1e-8:
        raise DecompositionError("local factor is not a tensor product of single-qubit gates")
    return g, a, b


def _to_su2(c: np.ndarray) -> np.ndarray:
    return c / np.sqrt(np.linalg.det(c))


# Conjugations swapping two axes: C sigma_i C^dag = +-sigma_j and vice versa.
_AXIS_SWAPS = {
    (0, 1): _to_su2(np.diag([1, 1j]).astype(np.complex128)),                    # S
    (0, 2): _to_su2(_S2 * np.array([[1, 1], [1, -1]], dtype=np.complex128)),    # H
    (1, 2): _S2 * (np.eye(2) - 1j * PAULIS[1]),                                 # exp(-i pi/4 X)
}


class _ChamberWalk:
    """
    Running state of U = phase * (a1 (x) b1) * U_d(alphas) * (a2 (x) b2).

    Every move changes alphas and compensates in the locals and the phase so
    that the product is unchanged.
    """

    def __init__(self, alphas, phase, a1, b1, a2, b2):
        self.alphas = [float(x) for x in alphas]
        self.phase = complex(phase)
        self.a1, self.b1, self.a2, self.b2 = a1, b1, a2, b2

    def shift(self, k: int, step: int) -> None:
        # U_d(alpha) = U_d(alpha + step pi/2 e_k) * (-i step) (i sigma_k) (x) (i sigma_k)
        isig = 1j * PAULIS[k + 1]
        self.alphas[k] += step * np.pi / 2
        self.phase *= -1j * step
        self.a2 = isig @ self.a2
        self.b2 = isig @ self.b2

    def negate(self, i: int, j: int) -> None:
        # sigma_m (x) I anticommutes with sigma_i sigma_i and sigma_j sigma_j
        m = 3 - i - j
        isig = 1j * PAULIS[m + 1]
        self.alphas[i] = -self.alphas[i]
        self.alphas[j] = -self.alphas[j]
        self.a1 = self.a1 @ isig
        self.a2 = isig.conj().T @ self.a2

    def swap(self, i: int, j: int) -> None:
        c = _AXIS_SWAPS[(min(i, j), max(i, j))]
        cd = c.conj().T
        self.alphas[i], self.alphas[j] = self.alphas[j], self.alphas[i]
        self.a1 = self.a1 @ cd
        self.b1 = self.b1 @ cd
        self.a2 = c @ self.a2
        self.b2 = c @ self.b2

    def into_chamber(self) -> None:
        quarter = np.pi / 4
        for k in range(3):
            n = int(np.ceil((self.alphas[k] - quarter - SNAP_TOL) / (np.pi / 2)))
            for _ in range(abs(n)):
                self.shift(k, -1 if n > 0 else 1)

        for _ in range(2):
            for i in (0, 1):
                if abs(self.alphas[i]) < abs(self.alphas[i + 1]):
                    self.swap(i, i + 1)

        a = self.alphas
        if a[0] < 0 and a[1] < 0:
            self.negate(0, 1)
        elif a[0] < 0:
            self.negate(0, 2)
        elif a[1] < 0:
            self.negate(1, 2)

        # on the a1 = pi/4 face, (pi/4, a2, -a3) ~ (pi/4, a2, a3)
        if abs(self.alphas[0] - quarter) < CHAMBER_TOL and self.alphas[2] < 0:
            self.shift(0, -1)
            self.negate(0, 2)

        if -SNAP_TOL < self.alphas[2] < 0:
            self.alphas[2] = 0.0


# ─────────────────────────────────────────────
# Decomposition
# ─────────────────────────────────────────────

def decompose(u: np.ndarray) -> CanonicalForm:
    """Canonical form of a 4x4 unitary. Raises DecompositionError rather than returning a bad form."""
    u = check_unitary(u, module="canonical")
    if u.shape != (4, 4):
        raise DimensionMismatchError(f"expected a 4x4 gate, got {u.shape}", module="canonical")

    root = complex(np.linalg.det(u)) ** 0.25
    v = u / root
    vm = MAGIC.conj().T @ v @ MAGIC

    rng = np.random.default_rng(DEGENERACY_SEED)
    p, d2 = _diagonalize_complex_symmetric(vm.T @ vm, rng)
    if np.linalg.det(p) < 0:
        p[:, 0] = -p[:, 0]

    d = np.sqrt(d2.astype(np.complex128))
    k1c = (vm @ p) / d[None, :]
    if np.max(np.abs(k1c.imag)) > 1e-6:
        raise DecompositionError(
            f"left orthogonal factor has imaginary part {np.max(np.abs(k1c.imag)):.3e}"
        )
    k1 = k1c.real.copy()
    if np.linalg.det(k1) < 0:
        k1[:, 0] = -k1[:, 0]
        d[0] = -d[0]

    w, a1, a2, a3 = _PHASE_MAP.T @ np.angle(d) / 4.0

    g_after, after_a, after_b = _kron_factor(MAGIC @ k1 @ MAGIC.conj().T)
    g_before, before_a, before_b = _kron_factor(MAGIC @ p.T @ MAGIC.conj().T)

    walk = _ChamberWalk(
        (a1, a2, a3),
        root * g_after * g_before * np.exp(1j * w),
        after_a, after_b, before_a, before_b,
    )
    walk.into_chamber()

    form = CanonicalForm(
        alphas=tuple(float(x) for x in walk.alphas),
        before_a=walk.a2,
        before_b=walk.b2,
        after_a=walk.a1,
        after_b=walk.b1,
        global_phase=walk.phase,
    )
    residual = float(np.linalg.norm(reconstruct(form) - u))
    if residual >= RECONSTRUCTION_TOL:
        raise DecompositionError(
            f"reconstruction residual {residual:.3e} exceeds {RECONSTRUCTION_TOL:g}"
        )
    logger.debug(f"[Canonical] alphas={form.alphas} residual={residual:.2e}")
    return form.model_copy(update={"residual": residual})


def local_equivalent(u: np.ndarray, v: np.ndarray, atol: float = 1e-9) -> bool:
    """True when u and v share canonical parameters."""
    a = np.array(decompose(u).alphas)
    b = np.array(decompose(v).alphas)
    return bool(np.max(np.abs(a - b)) < atol)
