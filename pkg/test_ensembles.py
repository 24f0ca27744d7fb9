"""
Tests for Holevo information, the twirl identity and the one-way and
bidirectional Pauli ensembles.
"""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from app.models.ensemble import GAP_LABEL, BidirectionalEnsemble, Ensemble
from app.models.state import ALICE_BOB_CUT, DensityMatrix, PureState
from app.services.canonical import NAMED_GATES, decompose, u_d
from app.services.ensembles import (
    build_bidirectional,
    build_one_way,
    dress_for_gate,
    gain_bidirectional,
    gain_one_way,
    holevo,
    ordering_residual,
    to_core_frame,
    twirl_check,
)
from app.services.entcap import delta_e, symmetry_check
from app.services.errors import DimensionMismatchError, InvalidEnsembleError
from app.services.qla import entanglement_entropy, random_state, random_unitary, reduced_state
from conftest import S2, bell_on_middle, two_bell_pairs

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def _core_case(name: str, psi: PureState):
    """The gate's canonical form and psi carried over to its core U_d."""
    form = decompose(NAMED_GATES[name])
    return form, to_core_frame(psi, form)


@pytest.fixture(scope="module")
def cnot_case():
    return _core_case("CNOT", bell_on_middle())


@pytest.fixture(scope="module")
def swap_case():
    return _core_case("SWAP", two_bell_pairs())


# ─────────────────────────────────────────────
# Holevo information
# ─────────────────────────────────────────────

def test_holevo_of_orthogonal_pair():
    pairs = [(0.5, PureState.basis("0").projector()), (0.5, PureState.basis("1").projector())]
    assert holevo(pairs) == pytest.approx(1.0, abs=1e-12)


def test_holevo_of_non_orthogonal_pair():
    plus = PureState(num_qubits=1, amplitudes=[S2, S2])
    pairs = [(0.5, PureState.basis("0").projector()), (0.5, plus.projector())]
    assert holevo(pairs) == pytest.approx(0.6009, abs=1e-4)


def test_holevo_of_single_state(rng):
    assert holevo([(1.0, random_state(2, rng).projector())]) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_holevo_of_equiprobable_basis_is_log_n(n):
    pairs = [(1 / 2**n, PureState.basis(format(k, f"0{n}b")).projector()) for k in range(2**n)]
    assert holevo(pairs) == pytest.approx(float(n), abs=1e-12)


def test_holevo_input_checks():
    rho = PureState.basis("0").projector()
    with pytest.raises(InvalidEnsembleError):
        holevo([])
    with pytest.raises(InvalidEnsembleError):
        holevo([(0.4, rho), (0.4, rho)])
    with pytest.raises(DimensionMismatchError):
        holevo([(0.5, rho), (0.5, PureState.basis("00").projector())])


# ─────────────────────────────────────────────
# Twirl identity
# ─────────────────────────────────────────────

def test_twirl_of_maximally_mixed_and_basis_state():
    assert twirl_check(DensityMatrix(matrix=np.eye(4) / 4)) == pytest.approx(0.0, abs=1e-15)
    assert twirl_check(PureState.basis("00").projector()) < 1e-12


@settings(max_examples=100, deadline=None)
@given(seed=seeds)
def test_twirl_of_random_states(seed):
    rng = np.random.default_rng(seed)
    psi = random_state(4, rng)
    assert twirl_check(reduced_state(psi, (3, 4))) < 1e-12


def test_twirl_needs_two_qubits():
    with pytest.raises(DimensionMismatchError):
        twirl_check(PureState.basis("0").projector())


# ─────────────────────────────────────────────
# One-way ensemble
# ─────────────────────────────────────────────

def test_one_way_states_keep_entanglement_and_twirl(cnot_case):
    form, psi = cnot_case
    ensemble = build_one_way(form.alphas, psi)
    assert len(ensemble) == 16
    assert ensemble.constructive
    assert all(p == pytest.approx(1 / 16) for p in ensemble.probabilities)
    for s in ensemble.states:
        assert entanglement_entropy(s, ALICE_BOB_CUT) == pytest.approx(1.0, abs=1e-10)
    avg = sum(reduced_state(s, (3, 4)).matrix for s in ensemble.states) / 16
    assert np.allclose(avg, np.eye(4) / 4, atol=1e-12)


def test_one_way_states_all_lose_capability(cnot_case):
    form, psi = cnot_case
    core = u_d(form.alphas)
    for s in build_one_way(form.alphas, psi).states:
        assert delta_e(core, s) == pytest.approx(-1.0, abs=1e-6)


def test_cnot_one_way_gain(cnot_case):
    form, psi = cnot_case
    ensemble = build_one_way(form.alphas, psi)
    on_core = gain_one_way(u_d(form.alphas), ensemble)
    assert on_core.chi_before == pytest.approx(1.0, abs=1e-9)
    assert on_core.chi_after == pytest.approx(2.0, abs=1e-9)
    on_gate = gain_one_way(NAMED_GATES["CNOT"], dress_for_gate(ensemble, form))
    assert on_gate.gain == pytest.approx(1.0, abs=1e-9)
    assert on_gate.first_term_residual < 1e-10
    assert len(on_gate.table) == 16


def test_identity_gain_is_zero(rng):
    ensemble = build_one_way((0, 0, 0), random_state(4, rng))
    assert gain_one_way(np.eye(4), ensemble).gain == pytest.approx(0.0, abs=1e-12)


def test_swap_one_way_gain(swap_case):
    form, psi = swap_case
    assert delta_e(u_d(form.alphas), psi) == pytest.approx(-2.0, abs=1e-9)
    ensemble = dress_for_gate(build_one_way(form.alphas, psi), form)
    assert gain_one_way(NAMED_GATES["SWAP"], ensemble).gain == pytest.approx(2.0, abs=1e-9)


def test_one_way_needs_four_qubits():
    with pytest.raises(InvalidEnsembleError):
        build_one_way((0, 0, 0), PureState.basis("000"))


# ─────────────────────────────────────────────
# Bidirectional ensemble
# ─────────────────────────────────────────────

def test_bidirectional_states(cnot_case):
    form, psi = cnot_case
    be = build_bidirectional(form.alphas, psi)
    core = u_d(form.alphas)
    assert len(be.states) == 16 and all(len(row) == 16 for row in be.states)
    for i in (0, 5, 15):
        for j in (0, 7, 12):
            s = be.states[i][j]
            assert entanglement_entropy(s, ALICE_BOB_CUT) == pytest.approx(1.0, abs=1e-10)
            assert delta_e(core, s) == pytest.approx(-1.0, abs=1e-6)


def test_operator_order_only_changes_a_phase(rng):
    assert ordering_residual(random_state(4, rng)) < 1e-12


def test_cnot_bidirectional_gain(cnot_case):
    form, psi = cnot_case
    be = dress_for_gate(build_bidirectional(form.alphas, psi), form)
    report = gain_bidirectional(NAMED_GATES["CNOT"], be)
    assert report.forward.gain == pytest.approx(1.0, abs=1e-9)
    assert report.backward.gain == pytest.approx(1.0, abs=1e-9)
    assert report.total_gain == pytest.approx(2.0, abs=1e-9)
    assert report.gap == pytest.approx(report.chi_both_after - report.chi_both_before)
    assert report.gap_label == GAP_LABEL


def test_swap_bidirectional_gain(swap_case):
    form, psi = swap_case
    be = dress_for_gate(build_bidirectional(form.alphas, psi), form)
    assert gain_bidirectional(NAMED_GATES["SWAP"], be).total_gain == pytest.approx(4.0, abs=1e-9)


def test_identity_bidirectional_gain_is_zero(rng):
    be = build_bidirectional((0, 0, 0), random_state(4, rng))
    assert gain_bidirectional(np.eye(4), be).total_gain == pytest.approx(0.0, abs=1e-12)


def test_bidirectional_grid_edges_match_one_way(cnot_case):
    # label (0, 0) is the identity, so row 0 and column 0 are the one-way states
    form, psi = cnot_case
    be = build_bidirectional(form.alphas, psi)
    one = build_one_way(form.alphas, psi)
    for k in range(16):
        assert np.allclose(be.states[k][0].amplitudes, one.states[k].amplitudes, atol=1e-15)
        assert np.allclose(be.states[0][k].amplitudes, one.states[k].amplitudes, atol=1e-15)
    assert be.row_labels == be.col_labels == one.labels


# ─────────────────────────────────────────────
# Frames and validation
# ─────────────────────────────────────────────

def test_dressing_undoes_core_frame(rng):
    form = decompose(NAMED_GATES["CNOT"])
    psi = random_state(4, rng)
    ensemble = Ensemble(probabilities=(1.0,), states=(to_core_frame(psi, form),))
    back = dress_for_gate(ensemble, form).states[0]
    assert np.allclose(back.amplitudes, psi.amplitudes, atol=1e-12)


def test_ensemble_validation(rng):
    psi = random_state(4, rng)
    with pytest.raises(ValueError):
        Ensemble(probabilities=(0.5,), states=(psi,))
    with pytest.raises(ValueError):
        Ensemble(probabilities=(0.7, 0.3), states=(psi, psi), constructive=True)
    with pytest.raises(ValueError):
        Ensemble(probabilities=(0.5, 0.5), states=(psi, PureState.basis("000")))
    with pytest.raises(ValueError):
        BidirectionalEnsemble(row_probs=(1.0,), col_probs=(0.5, 0.5), states=((psi,),))


# ─────────────────────────────────────────────
# Gains on generic gates
# ─────────────────────────────────────────────

@pytest.fixture(scope="module")
def generic_gates(fast_config):
    """(u, form, symmetry report) for five Haar-random gates."""
    cases = []
    for seed in range(5):
        u = random_unitary(4, np.random.default_rng(500 + seed))
        cases.append((u, decompose(u), symmetry_check(u, fast_config)))
    return cases


@pytest.mark.parametrize("k", range(5))
def test_one_way_gain_equals_capability(k, generic_gates):
    u, form, sym = generic_gates[k]
    ensemble = dress_for_gate(build_one_way(form.alphas, sym.witness_state), form)
    assert gain_one_way(u, ensemble).gain == pytest.approx(sym.e_u, abs=2e-3)


@pytest.mark.parametrize("k", range(5))
def test_bidirectional_gain_is_twice_capability(k, generic_gates):
    u, form, sym = generic_gates[k]
    be = dress_for_gate(build_bidirectional(form.alphas, sym.witness_state), form)
    report = gain_bidirectional(u, be)
    assert report.total_gain == pytest.approx(2 * sym.e_u, abs=4e-3)
    assert report.forward.gain == pytest.approx(report.backward.gain, abs=4e-3)
