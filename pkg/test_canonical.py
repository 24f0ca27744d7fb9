"""
Tests for the canonical decomposition and the U_d identities.
"""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from app.models.gate import GateSpec
from app.services.canonical import (
    MAGIC,
    NAMED_GATES,
    conjugation_check,
    decompose,
    gate_matrix,
    local_equivalent,
    magic_basis,
    reconstruct,
    u_d,
)
from app.services.errors import DimensionMismatchError, NonUnitaryError
from app.services.qla import PAULIS, random_unitary

QUARTER = np.pi / 4
seeds = st.integers(min_value=0, max_value=2**32 - 1)
angles = st.floats(min_value=-np.pi, max_value=np.pi, allow_nan=False)


def _in_chamber(alphas, tol=1e-9) -> bool:
    a1, a2, a3 = alphas
    ok = QUARTER + tol >= a1 >= a2 - tol and a2 + tol >= abs(a3)
    if abs(a1 - QUARTER) < tol:
        ok = ok and a3 >= -tol
    return ok


def _su2(rng):
    u = random_unitary(2, rng)
    return u / np.sqrt(np.linalg.det(u))


# ─────────────────────────────────────────────
# U_d
# ─────────────────────────────────────────────

def test_u_d_at_zero_is_identity():
    assert np.allclose(u_d((0, 0, 0)), np.eye(4))


def test_u_d_matches_matrix_exponential():
    from scipy.linalg import expm

    a = (0.3, -0.2, 0.7)
    h = sum(x * np.kron(PAULIS[k], PAULIS[k]) for x, k in zip(a, (1, 2, 3)))
    assert np.allclose(u_d(a), expm(-1j * h), atol=1e-12)


def test_u_d_is_diagonal_in_magic_basis():
    d = MAGIC.conj().T @ u_d((0.4, 0.25, -0.1)) @ MAGIC
    assert np.allclose(d, np.diag(np.diag(d)), atol=1e-12)


def test_u_d_rejects_bad_alphas():
    with pytest.raises(DimensionMismatchError):
        u_d((0.1, 0.2))
    with pytest.raises(DimensionMismatchError):
        u_d((0.1, np.inf, 0.0))


def test_magic_basis_is_unitary_copy():
    m = magic_basis()
    assert np.allclose(m.conj().T @ m, np.eye(4))
    m[0, 0] = 0
    assert MAGIC[0, 0] != 0


def test_cnot_and_swap_are_locally_equivalent_to_their_cores():
    assert local_equivalent(u_d((QUARTER, 0, 0)), NAMED_GATES["CNOT"])
    assert local_equivalent(u_d((QUARTER, QUARTER, QUARTER)), NAMED_GATES["SWAP"])


# ─────────────────────────────────────────────
# Conjugation identities
# ─────────────────────────────────────────────

def test_conjugation_at_zero_and_cnot_point():
    assert conjugation_check((0, 0, 0)).max_residual == pytest.approx(0.0, abs=1e-15)
    assert conjugation_check((QUARTER, 0, 0)).max_residual < 1e-12


@settings(max_examples=100, deadline=None)
@given(a=angles, b=angles, c=angles)
def test_conjugation_for_random_alphas(a, b, c):
    report = conjugation_check((a, b, c))
    assert report.conjugate_residual < 1e-12
    assert report.unitarity_residual < 1e-12
    assert report.commutation_residual < 1e-12


# ─────────────────────────────────────────────
# Decomposition
# ─────────────────────────────────────────────

@pytest.mark.parametrize(
    "name, alphas",
    [
        ("IDENTITY", (0.0, 0.0, 0.0)),
        ("CNOT", (QUARTER, 0.0, 0.0)),
        ("CZ", (QUARTER, 0.0, 0.0)),
        ("ISWAP", (QUARTER, QUARTER, 0.0)),
        ("SWAP", (QUARTER, QUARTER, QUARTER)),
    ],
)
def test_named_gates(name, alphas):
    form = decompose(NAMED_GATES[name])
    assert np.allclose(form.alphas, alphas, atol=1e-9)
    assert form.residual < 1e-9
    assert np.allclose(reconstruct(form), NAMED_GATES[name], atol=1e-9)


def test_local_factors_are_special_unitary():
    form = decompose(NAMED_GATES["CNOT"])
    for f in (form.before_a, form.before_b, form.after_a, form.after_b):
        assert np.allclose(f @ f.conj().T, np.eye(2), atol=1e-10)
        assert abs(np.linalg.det(f) - 1) < 1e-9


@settings(max_examples=10, deadline=None)
@given(seed=seeds)
def test_cnot_alphas_survive_local_dressing(seed):
    rng = np.random.default_rng(seed)
    u = np.kron(_su2(rng), _su2(rng)) @ NAMED_GATES["CNOT"] @ np.kron(_su2(rng), _su2(rng))
    form = decompose(u)
    assert np.allclose(form.alphas, (QUARTER, 0, 0), atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(seed=seeds)
def test_random_unitaries_land_in_chamber_and_reconstruct(seed):
    rng = np.random.default_rng(seed)
    u = random_unitary(4, rng)
    form = decompose(u)
    assert _in_chamber(form.alphas)
    assert np.linalg.norm(reconstruct(form) - u) < 1e-9


@settings(max_examples=30, deadline=None)
@given(a=angles, b=angles, c=angles)
def test_cores_decompose_to_equivalent_cores(a, b, c):
    form = decompose(u_d((a, b, c)))
    assert _in_chamber(form.alphas)
    assert local_equivalent(u_d(form.alphas), u_d((a, b, c)))


def test_many_haar_unitaries_decompose():
    for seed in range(1000):
        u = random_unitary(4, np.random.default_rng(seed))
        form = decompose(u)
        assert form.residual < 1e-9
        assert _in_chamber(form.alphas)


def test_decompose_is_deterministic(rng):
    u = random_unitary(4, rng)
    first, second = decompose(u), decompose(u)
    assert first.alphas == second.alphas
    assert np.array_equal(first.before_a, second.before_a)


def test_degenerate_gates_decompose():
    # repeated magic-basis phases
    for alphas in ((0.3, 0.3, 0.3), (0.2, 0.2, 0.0), (QUARTER, 0.1, 0.1)):
        form = decompose(u_d(alphas))
        assert form.residual < 1e-9


def test_global_phase_is_carried():
    form = decompose(np.exp(0.7j) * NAMED_GATES["SWAP"])
    assert np.allclose(form.alphas, (QUARTER, QUARTER, QUARTER), atol=1e-9)
    assert form.residual < 1e-9


def test_decompose_rejects_bad_input():
    with pytest.raises(NonUnitaryError):
        decompose(np.ones((4, 4)))
    with pytest.raises(DimensionMismatchError):
        decompose(np.eye(8))


# ─────────────────────────────────────────────
# Gate specs
# ─────────────────────────────────────────────

def test_gate_spec_variants():
    assert np.array_equal(gate_matrix(GateSpec(name="CNOT")), NAMED_GATES["CNOT"])
    assert np.allclose(gate_matrix(GateSpec(canonical=(0.7853981634, 0, 0))), u_d((QUARTER, 0, 0)), atol=1e-9)
    eye = [[(1.0 if i == j else 0.0, 0.0) for j in range(4)] for i in range(4)]
    assert local_equivalent(gate_matrix(GateSpec(matrix=eye)), NAMED_GATES["IDENTITY"])


def test_gate_spec_needs_exactly_one_variant():
    with pytest.raises(ValueError):
        GateSpec()
    with pytest.raises(ValueError):
        GateSpec(name="CNOT", canonical=(0, 0, 0))
    with pytest.raises(ValueError):
        GateSpec(matrix=[[(1.0, 0.0)]])


def test_gate_spec_matrix_must_be_unitary():
    bad = [[(1.0, 0.0)] * 4 for _ in range(4)]
    with pytest.raises(NonUnitaryError):
        gate_matrix(GateSpec(matrix=bad))
