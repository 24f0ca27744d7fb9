"""
Tests for protocol execution and the superposition-of-messages audit.

Expected values for the shipped library:

    protocol              n_a n_b t   delta_E_xy   audit delta_E
    empty                  0   0  0       0             0
    cnot-one-way           1   0  1       0             1
    cnot-bidirectional     1   1  1      -1             1
    swap-superdense        2   2  1      -2             2
"""
import numpy as np
import pytest

from app.models.protocol import Protocol, parse_label
from app.services import protocols as protocol_lib
from app.services.errors import ImperfectProtocolError, ProtocolError
from app.services.protocols import (
    Layout,
    basis_input,
    linearity_residual,
    load_protocol_file,
    message_pairs,
    parse_protocol,
    protocol_gate,
    run_protocol,
    superposition_audit,
    superposition_input,
    with_capability,
)
from app.services.qla import schmidt_entropy

EXPECTED = {
    "empty": (0.0, 0.0),
    "cnot-one-way": (0.0, 1.0),
    "cnot-bidirectional": (-1.0, 1.0),
    "swap-superdense": (-2.0, 2.0),
}


# ─────────────────────────────────────────────
# Library
# ─────────────────────────────────────────────

def test_library_loads(protocols_loaded):
    assert set(EXPECTED) <= set(protocols_loaded)
    assert protocols_loaded["swap-superdense"].t == 1
    assert protocols_loaded["empty"].t == 0


def test_unknown_protocol(protocols_loaded):
    with pytest.raises(ProtocolError):
        protocol_lib.get_protocol("teleport-everything")


def test_missing_file():
    with pytest.raises(ProtocolError):
        load_protocol_file("no/such/protocol.json")


# ─────────────────────────────────────────────
# Registers
# ─────────────────────────────────────────────

def test_layout_order(protocols_loaded):
    layout = Layout(protocols_loaded["cnot-bidirectional"])
    assert layout.registers == {"A1": [1], "A3": [2], "A2": [3], "B1": [4], "B3": [5], "B2": [6]}
    assert layout.cut.side_a == (1, 2, 3)
    assert layout.qubit("B2[0]") == 6


def test_one_way_padding(protocols_loaded):
    p = protocols_loaded["cnot-one-way"]
    assert p.width == 1 and p.register_sizes["B3"] == 0
    layout = Layout(p)
    # qubits A1 A3 A2 | B1 B2; x = 1 lands in A1, the copy A3 stays |0>
    assert np.argmax(np.abs(basis_input(p, layout, "1", "").amplitudes)) == int("10000", 2)


def test_parse_label():
    assert parse_label("B2[3]") == ("B2", 3)
    with pytest.raises(ValueError):
        parse_label("C1[0]")


def test_superposition_input_entangles_copies(protocols_loaded):
    p = protocols_loaded["cnot-one-way"]
    layout = Layout(p)
    psi = superposition_input(p, layout)
    assert psi.num_qubits == 5
    # A1 and A3 share one ebit, but both sit with Alice
    assert schmidt_entropy(psi, layout.cut) == pytest.approx(0.0, abs=1e-12)


# ─────────────────────────────────────────────
# Basis runs
# ─────────────────────────────────────────────

@pytest.mark.parametrize("name", sorted(EXPECTED))
def test_every_message_is_delivered(name, protocols_loaded):
    p = protocols_loaded[name]
    for x, y in message_pairs(p):
        _, fidelity, delta = run_protocol(p, x, y)
        assert fidelity == pytest.approx(1.0, abs=1e-10)
        assert delta == pytest.approx(EXPECTED[name][0], abs=1e-9)


def test_message_pairs_enumerate_all(protocols_loaded):
    assert len(message_pairs(protocols_loaded["swap-superdense"])) == 16
    assert message_pairs(protocols_loaded["empty"]) == [("", "")]


def test_bad_messages_are_rejected(protocols_loaded):
    p = protocols_loaded["cnot-bidirectional"]
    with pytest.raises(ProtocolError):
        run_protocol(p, "10", "0")
    with pytest.raises(ProtocolError):
        run_protocol(p, "2", "0")


@pytest.mark.parametrize("name", sorted(EXPECTED))
def test_execution_is_linear(name, protocols_loaded, rng):
    assert linearity_residual(protocols_loaded[name], rng, trials=4) < 1e-12


# ─────────────────────────────────────────────
# Audit
# ─────────────────────────────────────────────

@pytest.mark.parametrize("name", sorted(EXPECTED))
def test_audit_identity(name, protocols_loaded):
    report = superposition_audit(protocols_loaded[name])
    p = protocols_loaded[name]
    assert report.mean_delta_e_xy == pytest.approx(EXPECTED[name][0], abs=1e-9)
    assert report.delta_e == pytest.approx(EXPECTED[name][1], abs=1e-9)
    assert report.expected_delta_e == pytest.approx(p.n_a + p.n_b + report.mean_delta_e_xy)
    assert report.identity_residual < 1e-9
    assert len(report.runs) == 2 ** (p.n_a + p.n_b)


def test_audit_rates(protocols_loaded):
    report = superposition_audit(protocols_loaded["swap-superdense"])
    assert report.message_rate == pytest.approx(4.0)
    assert report.delta_e_per_use == pytest.approx(2.0, abs=1e-9)
    empty = superposition_audit(protocols_loaded["empty"])
    assert empty.message_rate is None and empty.delta_e_per_use is None


def test_rate_bound_slack(protocols_loaded):
    report = superposition_audit(protocols_loaded["cnot-bidirectional"])
    bounded = with_capability(report, 1.0, 1.0)
    assert bounded.rate_bound_slack == pytest.approx(0.0, abs=1e-12)
    assert with_capability(report, 0.5, 0.5).rate_bound_slack == pytest.approx(-1.0)


def test_audit_refuses_imperfect_protocol(protocols_loaded):
    with pytest.raises(ImperfectProtocolError) as info:
        superposition_audit(protocols_loaded["cnot-one-way"], np.eye(4))
    assert len(info.value.fidelities) == 2
    assert info.value.diagnostic().startswith("[protocols]")


# ─────────────────────────────────────────────
# Validation
# ─────────────────────────────────────────────

def _base(**overrides):
    data = {
        "name": "probe",
        "gate": "CNOT",
        "n_a": 1,
        "n_b": 0,
        "ancilla_a": 1,
        "ancilla_b": 1,
        "steps": [{"kind": "interaction", "targets": ["A2[0]", "B2[0]"]}],
    }
    data.update(overrides)
    return data


def test_valid_probe_parses():
    p = parse_protocol(_base())
    assert isinstance(p, Protocol) and p.num_qubits == 5


@pytest.mark.parametrize(
    "overrides",
    [
        {"steps": [{"kind": "interaction", "targets": ["B2[0]", "A2[0]"]}]},
        {"steps": [{"kind": "alice", "gate": "H", "targets": ["B1[0]"]}]},
        {"steps": [{"kind": "alice", "gate": "CNOT", "targets": ["A1[0]"]}]},
        {"steps": [{"kind": "alice", "gate": "T", "targets": ["A1[0]"]}]},
        {"steps": [{"kind": "alice", "gate": "H", "targets": ["A2[5]"]}]},
        {"resource_pairs": [["A2[0]", "A1[0]"]]},
        {"n_a": 4, "n_b": 4},
        {"n_a": 0, "n_b": 0, "ancilla_a": 0},
    ],
)
def test_invalid_protocols(overrides):
    with pytest.raises(ProtocolError):
        parse_protocol(_base(**overrides))


def test_protocol_gate_resolution(protocols_loaded):
    assert np.array_equal(protocol_gate(protocols_loaded["empty"]), np.eye(4))
    unnamed = parse_protocol(_base(gate=None))
    with pytest.raises(ProtocolError):
        protocol_gate(unnamed)
