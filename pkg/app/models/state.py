"""
Pydantic models for the numeric carriers: pure states, density matrices and
bipartitions.

Qubit labels are 1-based and qubit 1 is the most significant bit of the
amplitude index, so |q1 q2 ... qn> sits at index q1*2^(n-1) + ... + qn.

Arrays are stored read-only; the models are frozen and safe to share.
"""
from typing import Iterable, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

MAX_QUBITS = 12
NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12


def _frozen_complex(value) -> np.ndarray:
    arr = np.array(value, dtype=np.complex128)
    if not np.all(np.isfinite(arr)):
        raise ValueError("entries must be finite")
    arr.setflags(write=False)
    return arr


class PureState(BaseModel):
    """Normalized n-qubit state vector."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    num_qubits: int
    amplitudes: np.ndarray

    @field_validator("amplitudes", mode="before")
    @classmethod
    def _as_array(cls, v):
        arr = _frozen_complex(v)
        if arr.ndim != 1:
            raise ValueError("amplitudes must be a flat vector")
        return arr

    @model_validator(mode="after")
    def _check(self):
        if not 1 <= self.num_qubits <= MAX_QUBITS:
            raise ValueError(f"num_qubits must be in [1, {MAX_QUBITS}], got {self.num_qubits}")
        if self.amplitudes.shape[0] != 2 ** self.num_qubits:
            raise ValueError(
                f"expected {2 ** self.num_qubits} amplitudes, got {self.amplitudes.shape[0]}"
            )
        norm = float(np.linalg.norm(self.amplitudes))
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {norm!r} differs from 1 by more than {NORM_TOL}")
        return self

    @classmethod
    def from_amplitudes(cls, amplitudes, normalize: bool = False) -> "PureState":
        arr = np.asarray(amplitudes, dtype=np.complex128).ravel()
        n = int(round(np.log2(arr.shape[0]))) if arr.shape[0] > 0 else 0
        if normalize:
            arr = arr / np.linalg.norm(arr)
        return cls(num_qubits=n, amplitudes=arr)

    @classmethod
    def basis(cls, bits: str) -> "PureState":
        """Computational basis state from a bit string, qubit 1 first."""
        amps = np.zeros(2 ** len(bits), dtype=np.complex128)
        amps[int(bits, 2) if bits else 0] = 1.0
        return cls(num_qubits=len(bits), amplitudes=amps)

    def conjugate(self) -> "PureState":
        return PureState(num_qubits=self.num_qubits, amplitudes=np.conj(self.amplitudes))

    def projector(self) -> "DensityMatrix":
        return DensityMatrix(matrix=np.outer(self.amplitudes, np.conj(self.amplitudes)))

    def tensor(self) -> np.ndarray:
        """Amplitudes as an n-index tensor, axis k-1 is qubit k."""
        return self.amplitudes.reshape((2,) * self.num_qubits)


class DensityMatrix(BaseModel):
    """Hermitian, unit-trace 2^n x 2^n operator."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    matrix: np.ndarray

    @field_validator("matrix", mode="before")
    @classmethod
    def _as_array(cls, v):
        arr = _frozen_complex(v)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError("density matrix must be square")
        dim = arr.shape[0]
        if dim < 2 or dim & (dim - 1):
            raise ValueError(f"dimension {dim} is not a power of two")
        return arr

    @model_validator(mode="after")
    def _check(self):
        m = self.matrix
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise ValueError("density matrix is not Hermitian")
        tr = np.trace(m)
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace {tr.real!r} is not 1")
        return self

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def num_qubits(self) -> int:
        return self.dim.bit_length() - 1


class Bipartition(BaseModel):
    """An A|B cut of the qubits 1..n."""

    model_config = ConfigDict(frozen=True)

    side_a: Tuple[int, ...]
    side_b: Tuple[int, ...]

    @field_validator("side_a", "side_b", mode="before")
    @classmethod
    def _sorted(cls, v):
        return tuple(sorted(int(q) for q in v))

    @model_validator(mode="after")
    def _check(self):
        a, b = set(self.side_a), set(self.side_b)
        if len(a) != len(self.side_a) or len(b) != len(self.side_b):
            raise ValueError("duplicate qubit label in cut")
        if not a or not b:
            raise ValueError("both sides of a cut must be non-empty")
        if a & b:
            raise ValueError(f"cut sides overlap on {sorted(a & b)}")
        n = len(a) + len(b)
        if a | b != set(range(1, n + 1)):
            raise ValueError(f"cut must cover qubits 1..{n} exactly once")
        return self

    @property
    def num_qubits(self) -> int:
        return len(self.side_a) + len(self.side_b)

    @classmethod
    def of(cls, side_a: Iterable[int], num_qubits: int) -> "Bipartition":
        a = sorted(set(side_a))
        return cls(side_a=a, side_b=[q for q in range(1, num_qubits + 1) if q not in a])


# The 4-qubit layout: Alice holds ancilla 1 and gate qubit 2, Bob holds gate
# qubit 3 and ancilla 4.
ALICE_BOB_CUT = Bipartition(side_a=(1, 2), side_b=(3, 4))


class SchmidtDecomposition(BaseModel):
    """psi = sum_n coefficients[n] * basis_a[:, n] (x) basis_b[:, n] over `cut`."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    cut: Bipartition
    coefficients: Tuple[float, ...]
    basis_a: np.ndarray
    basis_b: np.ndarray

    @property
    def lambdas(self) -> np.ndarray:
        return np.asarray(self.coefficients) ** 2

    def reconstruct(self) -> np.ndarray:
        """Amplitudes of sum_n sqrt(lambda_n) phi_n (x) chi_n in standard qubit order."""
        grouped = np.einsum("n,an,bn->ab", np.asarray(self.coefficients), self.basis_a, self.basis_b)
        order = list(self.cut.side_a) + list(self.cut.side_b)
        t = grouped.reshape((2,) * len(order))
        # axis i of t carries qubit order[i]; put qubit k back on axis k-1
        t = np.transpose(t, np.argsort(order))
        return t.reshape(-1)
