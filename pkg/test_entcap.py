"""
Tests for entanglement capability: delta_e, the multi-start optimizer, the
random-search oracle and the increase/decrease symmetry.
"""
import numpy as np
import pytest

from app.models.capability import OptimizerConfig
from app.models.state import PureState
from app.services.canonical import NAMED_GATES, u_d
from app.services.entcap import (
    capability,
    conjugate_witness,
    delta_e,
    random_search,
    symmetry_check,
)
from app.services.errors import DimensionMismatchError, NonUnitaryError
from app.services.qla import random_state, random_unitary
from conftest import S2, bell_on_middle


def _su2(rng):
    u = random_unitary(2, rng)
    return u / np.sqrt(np.linalg.det(u))


# ─────────────────────────────────────────────
# delta_e
# ─────────────────────────────────────────────

def test_identity_never_changes_entanglement(rng):
    for _ in range(5):
        assert delta_e(np.eye(4), random_state(4, rng)) == pytest.approx(0.0, abs=1e-12)


def test_cnot_disentangles_middle_bell_pair():
    assert delta_e(NAMED_GATES["CNOT"], bell_on_middle()) == pytest.approx(-1.0, abs=1e-12)


def test_cnot_entangles_plus_state():
    amps = np.zeros(16, dtype=np.complex128)
    amps[int("0000", 2)] = S2
    amps[int("0100", 2)] = S2
    psi = PureState(num_qubits=4, amplitudes=amps)
    assert delta_e(NAMED_GATES["CNOT"], psi) == pytest.approx(1.0, abs=1e-12)


def test_delta_e_input_checks():
    with pytest.raises(DimensionMismatchError):
        delta_e(np.eye(4), PureState.basis("000"))
    with pytest.raises(NonUnitaryError):
        delta_e(np.ones((4, 4)), PureState.basis("0000"))


# ─────────────────────────────────────────────
# Capability
# ─────────────────────────────────────────────

def test_identity_capability_is_zero(fast_config):
    result = capability(np.eye(4), "increase", fast_config)
    assert result.value == pytest.approx(0.0, abs=1e-6)
    assert result.restarts_used == fast_config.restarts


def test_cnot_capability_is_one_ebit(fast_config):
    result = capability(NAMED_GATES["CNOT"], "increase", fast_config)
    assert result.value == pytest.approx(1.0, abs=1e-4)
    assert delta_e(NAMED_GATES["CNOT"], result.argmax_state) == pytest.approx(result.value, abs=1e-12)
    assert len(result.traces) == fast_config.restarts
    assert result.traces[result.best_restart].seed == fast_config.seed + result.best_restart


def test_swap_capability_is_two_ebits(fast_config):
    result = capability(NAMED_GATES["SWAP"], "increase", fast_config)
    assert result.value == pytest.approx(2.0, abs=1e-4)


def test_capability_is_reproducible():
    cfg = OptimizerConfig(restarts=4, max_iters=300, seed=7, oracle_samples=0)
    a = capability(u_d((0.5, 0.2, 0.1)), "increase", cfg)
    b = capability(u_d((0.5, 0.2, 0.1)), "increase", cfg)
    assert a.value == b.value
    assert np.array_equal(a.argmax_state.amplitudes, b.argmax_state.amplitudes)


def test_capability_ignores_local_dressing(fast_config, rng):
    dressed = np.kron(_su2(rng), _su2(rng)) @ NAMED_GATES["CNOT"] @ np.kron(_su2(rng), _su2(rng))
    result = capability(dressed, "increase", fast_config)
    assert result.value == pytest.approx(1.0, abs=2e-3)


def test_capability_never_exceeds_two(fast_config):
    result = capability(u_d((0.7, 0.6, 0.3)), "increase", fast_config)
    assert 0.0 <= result.value <= 2.0 + 1e-9


def test_capability_rejects_wrong_size():
    with pytest.raises(DimensionMismatchError):
        capability(np.eye(8), "increase", OptimizerConfig(restarts=1, max_iters=1))


# ─────────────────────────────────────────────
# Oracle
# ─────────────────────────────────────────────

def test_random_search_is_a_lower_bound():
    oracle = random_search(NAMED_GATES["CNOT"], "increase", 20_000, seed=3)
    assert 0.0 < oracle.value <= 1.0 + 1e-9
    assert oracle.samples == 20_000
    assert delta_e(NAMED_GATES["CNOT"], oracle.best_state) == pytest.approx(oracle.value, abs=1e-9)


@pytest.mark.parametrize("name", ["CNOT", "SWAP"])
def test_capability_beats_random_search(name, fast_config):
    result = capability(NAMED_GATES[name], "increase", fast_config)
    oracle = random_search(NAMED_GATES[name], "increase", 20_000, seed=fast_config.seed)
    assert result.value >= oracle.value - 1e-3


def test_capability_grows_along_the_cnot_edge(fast_config):
    full = capability(u_d((np.pi / 4, 0, 0)), "increase", fast_config)
    half = capability(u_d((np.pi / 8, 0, 0)), "increase", fast_config)
    assert full.value >= half.value - 1e-3
    assert half.value < full.value


def test_random_search_without_samples():
    oracle = random_search(NAMED_GATES["CNOT"], "increase", 0, seed=3)
    assert oracle.value == 0.0
    assert oracle.best_state is None


# ─────────────────────────────────────────────
# Symmetry E_U = E_U^-
# ─────────────────────────────────────────────

def test_cnot_symmetry(fast_config):
    report = symmetry_check(NAMED_GATES["CNOT"], fast_config)
    assert report.e_u == pytest.approx(1.0, abs=1e-4)
    assert report.gap < 1e-3
    assert report.witness_residual < 1e-6


def test_swap_symmetry(fast_config):
    report = symmetry_check(NAMED_GATES["SWAP"], fast_config)
    assert report.e_u == pytest.approx(2.0, abs=1e-4)
    assert report.gap < 1e-3


@pytest.mark.parametrize("seed", range(10))
def test_symmetry_for_random_cores(seed, fast_config):
    rng = np.random.default_rng(100 + seed)
    alphas = tuple(rng.uniform(-np.pi, np.pi, size=3))
    report = symmetry_check(u_d(alphas), fast_config)
    assert report.gap < 2e-3
    assert report.witness_residual < 1e-6


def test_conjugate_witness_loses_capability(fast_config):
    core = u_d((0.6, 0.3, 0.1))
    up = capability(core, "increase", fast_config)
    witness = conjugate_witness(core, up)
    assert delta_e(core, witness) == pytest.approx(-up.value, abs=1e-9)
