"""
Protocol execution and the superposition-of-messages audit.

A protocol is a fixed list of local unitaries and gate uses on the register
described in app.models.protocol. Two things run it, both through execute():

  run_protocol        one basis message pair (x, y): transfer fidelity and
                      the entanglement change of the non-message qubits
  superposition_audit every message pair at once, each message register
                      maximally entangled with a local copy (A3 / B3)

For an error-free protocol the coherent run must satisfy

    delta_E = (n_a + n_b) + 2^-(n_a+n_b) * sum_xy delta_E_xy

Protocols ship as JSON files and are loaded once at startup.
"""
import itertools
import json
import logging
import os
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import ValidationError

from app.models.protocol import AuditReport, MessageRun, Protocol, ProtocolStep, parse_label
from app.models.state import Bipartition, PureState
from app.services.canonical import NAMED_GATES
from app.services.errors import ImperfectProtocolError, ProtocolError
from app.services.qla import PAULIS, apply_on_qubits, check_unitary, schmidt_entropy

logger = logging.getLogger(__name__)

FIDELITY_TOL = 1e-10
IDENTITY_TOL = 1e-9

_S2 = 1.0 / np.sqrt(2.0)

LOCAL_GATES: Dict[str, np.ndarray] = {
    "I": PAULIS[0],
    "X": PAULIS[1],
    "Y": PAULIS[2],
    "Z": PAULIS[3],
    "H": _S2 * np.array([[1, 1], [1, -1]], dtype=np.complex128),
    "S": np.diag([1, 1j]).astype(np.complex128),
    "SDG": np.diag([1, -1j]).astype(np.complex128),
    "CNOT": NAMED_GATES["CNOT"],
    "CZ": NAMED_GATES["CZ"],
    "SWAP": NAMED_GATES["SWAP"],
}


# ─────────────────────────────────────────────
# Library (loaded once at startup)
# ─────────────────────────────────────────────

_protocols: Dict[str, Protocol] = {}


def parse_protocol(data: Dict) -> Protocol:
    try:
        return Protocol.model_validate(data)
    except ValidationError as e:
        raise ProtocolError(f"invalid protocol {data.get('name', '?')!r}: {e.errors()[0]['msg']}")


def load_protocol_file(path: str) -> Protocol:
    if not os.path.exists(path):
        raise ProtocolError(f"protocol file not found: {path}")
    with open(path, "r") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise ProtocolError(f"{path}: not valid JSON ({e})")
    return parse_protocol(data)


def load_protocols(protocols_dir: str = "protocols") -> None:
    global _protocols
    if not os.path.isdir(protocols_dir):
        raise FileNotFoundError(f"Protocols directory not found: {protocols_dir}")
    loaded = {}
    for fname in sorted(os.listdir(protocols_dir)):
        if fname.endswith(".json"):
            p = load_protocol_file(os.path.join(protocols_dir, fname))
            loaded[p.name] = p
    _protocols = loaded
    logger.info(f"Loaded {len(_protocols)} protocols from {protocols_dir}")


def get_protocols() -> Dict[str, Protocol]:
    return _protocols


def register_protocol(protocol: Protocol) -> None:
    if protocol.name in _protocols:
        logger.info(f"[Audit] replacing protocol {protocol.name!r}")
    _protocols[protocol.name] = protocol


def get_protocol(name: str) -> Protocol:
    if name not in _protocols:
        raise ProtocolError(f"unknown protocol {name!r}; known: {sorted(_protocols)}")
    return _protocols[name]


# ─────────────────────────────────────────────
# Register layout
# ─────────────────────────────────────────────

class Layout:
    """Register name -> 1-based qubit labels, in register order."""

    ORDER = ("A1", "A3", "A2", "B1", "B3", "B2")

    def __init__(self, protocol: Protocol):
        sizes = protocol.register_sizes
        self.registers: Dict[str, List[int]] = {}
        nxt = 1
        for reg in self.ORDER:
            self.registers[reg] = list(range(nxt, nxt + sizes[reg]))
            nxt += sizes[reg]
        self.num_qubits = nxt - 1
        alice = self.registers["A1"] + self.registers["A3"] + self.registers["A2"]
        self.cut = Bipartition.of(alice, self.num_qubits)

    def qubit(self, label: str) -> int:
        reg, idx = parse_label(label)
        return self.registers[reg][idx]

    def qubits(self, labels: List[str]) -> List[int]:
        return [self.qubit(label) for label in labels]


def _step_matrix(step: ProtocolStep) -> np.ndarray:
    if step.gate is not None:
        return LOCAL_GATES[step.gate.upper()]
    m = np.array([[complex(re, im) for re, im in row] for row in step.matrix])
    return check_unitary(m, module="protocols")


def protocol_gate(protocol: Protocol, u: Optional[np.ndarray] = None) -> np.ndarray:
    if u is not None:
        return check_unitary(u, module="protocols")
    if protocol.t == 0:
        return NAMED_GATES["IDENTITY"]
    if protocol.gate is None or protocol.gate not in NAMED_GATES:
        raise ProtocolError(f"protocol {protocol.name!r} names no gate; pass one explicitly")
    return NAMED_GATES[protocol.gate]


def execute(protocol: Protocol, state: PureState, layout: Layout, u: np.ndarray) -> PureState:
    """Run every step on `state` in order."""
    for i, step in enumerate(protocol.steps):
        targets = layout.qubits(step.targets)
        if step.kind != "interaction":
            owner = layout.cut.side_a if step.kind == "alice" else layout.cut.side_b
            if any(q not in owner for q in targets):
                raise ProtocolError(f"step {i}: {step.kind} step touches {step.targets} across the cut")
            state = apply_on_qubits(_step_matrix(step), state, targets)
        else:
            state = apply_on_qubits(u, state, targets)
    return state


# ─────────────────────────────────────────────
# Initial states
# ─────────────────────────────────────────────

def _resource_factor(protocol: Protocol) -> np.ndarray:
    """Amplitudes of the A2 B2 resource, A2 qubits first."""
    k = protocol.ancilla_a + protocol.ancilla_b
    if k == 0:
        return np.ones(1, dtype=np.complex128)
    if protocol.resource_amplitudes is not None:
        amps = np.array([complex(re, im) for re, im in protocol.resource_amplitudes])
        return amps / np.linalg.norm(amps)
    local = {f"A2[{i}]": i for i in range(protocol.ancilla_a)}
    local.update({f"B2[{i}]": protocol.ancilla_a + i for i in range(protocol.ancilla_b)})
    t = np.zeros((2,) * k, dtype=np.complex128)
    t[(0,) * k] = 1.0
    psi = PureState(num_qubits=k, amplitudes=t.reshape(-1))
    h = LOCAL_GATES["H"]
    for a, b in protocol.resource_pairs:
        qa, qb = local[a] + 1, local[b] + 1
        psi = apply_on_qubits(h, psi, [qa])
        psi = apply_on_qubits(LOCAL_GATES["CNOT"], psi, [qa, qb])
    return psi.amplitudes


def _assemble(protocol: Protocol, layout: Layout, message_part: np.ndarray) -> PureState:
    """
    message_part: tensor over (A1, A3, B1, B3) qubits in that order.
    Returns the full register with the resource on A2 B2.
    """
    resource = _resource_factor(protocol)
    sizes = protocol.register_sizes
    joint = np.multiply.outer(message_part.reshape(-1), resource).reshape((2,) * layout.num_qubits)
    # joint axes: A1, A3, B1, B3, A2, B2  ->  register order A1, A3, A2, B1, B3, B2
    groups, start = {}, 0
    for reg in ("A1", "A3", "B1", "B3", "A2", "B2"):
        groups[reg] = list(range(start, start + sizes[reg]))
        start += sizes[reg]
    axes = [ax for reg in Layout.ORDER for ax in groups[reg]]
    out = np.transpose(joint, axes).reshape(-1)
    return PureState(num_qubits=layout.num_qubits, amplitudes=out)


def _bits(bits: str, width: int) -> List[int]:
    return [int(b) for b in bits.ljust(width, "0")]


def basis_input(protocol: Protocol, layout: Layout, x: str, y: str) -> PureState:
    if len(x) != protocol.n_a or len(y) != protocol.n_b or set(x + y) - {"0", "1"}:
        raise ProtocolError(
            f"messages must be bit strings of length n_a={protocol.n_a}, n_b={protocol.n_b}; got {x!r}, {y!r}"
        )
    w = protocol.width
    bits = _bits(x, w) + [0] * protocol.n_a + _bits(y, w) + [0] * protocol.n_b
    part = np.zeros((2,) * len(bits), dtype=np.complex128)
    part[tuple(bits)] = 1.0
    return _assemble(protocol, layout, part)


def superposition_input(protocol: Protocol, layout: Layout) -> PureState:
    """2^-(n_a+n_b)/2 sum_xy |x>_A1 |x>_A3 |y>_B1 |y>_B3 (x) resource."""
    w, n_a, n_b = protocol.width, protocol.n_a, protocol.n_b
    part = np.zeros((2,) * (2 * w + n_a + n_b), dtype=np.complex128)
    for x, y in message_pairs(protocol):
        bits = _bits(x, w) + _bits(x, n_a) + _bits(y, w) + _bits(y, n_b)
        part[tuple(bits)] = 1.0
    part /= np.sqrt(2 ** (protocol.n_a + protocol.n_b))
    return _assemble(protocol, layout, part)


def message_pairs(protocol: Protocol) -> List[Tuple[str, str]]:
    xs = ["".join(b) for b in itertools.product("01", repeat=protocol.n_a)]
    ys = ["".join(b) for b in itertools.product("01", repeat=protocol.n_b)]
    return [(x, y) for x in xs for y in ys]


# ─────────────────────────────────────────────
# Runs
# ─────────────────────────────────────────────

def _readout_probability(state: PureState, layout: Layout, a1_bits: List[int], b1_bits: List[int]) -> float:
    t = state.tensor()
    index = [slice(None)] * layout.num_qubits
    for q, b in zip(layout.registers["A1"] + layout.registers["B1"], a1_bits + b1_bits):
        index[q - 1] = b
    return float(np.sum(np.abs(t[tuple(index)]) ** 2))


def run_protocol(
    protocol: Protocol, x: str, y: str, u: Optional[np.ndarray] = None
) -> Tuple[PureState, float, float]:
    """
    Run one message pair. Returns (output state, fidelity, delta_e_xy).

    fidelity is the probability that A1 reads y and B1 reads x (padded);
    delta_e_xy is the change of entanglement across Alice|Bob, which only the
    non-message qubits can carry.
    """
    layout = Layout(protocol)
    gate = protocol_gate(protocol, u)
    start = basis_input(protocol, layout, x, y)
    out = execute(protocol, start, layout, gate)
    w = protocol.width
    fidelity = _readout_probability(out, layout, _bits(y, w), _bits(x, w))
    delta = schmidt_entropy(out, layout.cut) - schmidt_entropy(start, layout.cut)
    return out, min(fidelity, 1.0), delta


def superposition_audit(protocol: Protocol, u: Optional[np.ndarray] = None) -> AuditReport:
    """
    Check delta_E = (n_a + n_b) + mean delta_E_xy on the coherent run.
    Refuses protocols that do not deliver every message pair exactly.
    """
    gate = protocol_gate(protocol, u)
    runs: List[MessageRun] = []
    for x, y in message_pairs(protocol):
        _, fidelity, delta = run_protocol(protocol, x, y, gate)
        runs.append(MessageRun(x=x, y=y, fidelity=fidelity, delta_e=delta))
    bad = [r for r in runs if r.fidelity < 1.0 - FIDELITY_TOL]
    if bad:
        raise ImperfectProtocolError(
            f"protocol {protocol.name!r} is not error-free on {len(bad)} of {len(runs)} message pairs",
            [r.model_dump() for r in runs],
        )

    layout = Layout(protocol)
    start = superposition_input(protocol, layout)
    out = execute(protocol, start, layout, gate)
    delta = schmidt_entropy(out, layout.cut) - schmidt_entropy(start, layout.cut)

    mean_xy = float(np.mean([r.delta_e for r in runs]))
    n = protocol.n_a + protocol.n_b
    expected = n + mean_xy
    residual = abs(delta - expected)
    t = protocol.t
    logger.info(
        f"[Audit] {protocol.name}: delta_E={delta:.9f} expected={expected:.9f} residual={residual:.2e}"
    )
    if residual >= IDENTITY_TOL:
        logger.warning(f"[Audit] {protocol.name}: identity residual {residual:.3e} above {IDENTITY_TOL:g}")
    return AuditReport(
        protocol=protocol.name,
        gate=protocol.gate,
        n_a=protocol.n_a,
        n_b=protocol.n_b,
        t=t,
        runs=runs,
        mean_delta_e_xy=mean_xy,
        delta_e=delta,
        expected_delta_e=expected,
        identity_residual=residual,
        delta_e_per_use=delta / t if t else None,
        message_rate=n / t if t else None,
    )


def with_capability(report: AuditReport, e_u: float, e_u_minus: float) -> AuditReport:
    """Attach E_U, E_U^- and the slack of (n_a + n_b)/t <= E_U + E_U^-."""
    slack = None if report.message_rate is None else e_u + e_u_minus - report.message_rate
    return report.model_copy(update={"e_u": e_u, "e_u_minus": e_u_minus, "rate_bound_slack": slack})


def linearity_residual(
    protocol: Protocol, rng: np.random.Generator, trials: int = 5, u: Optional[np.ndarray] = None
) -> float:
    """Largest ||run(a s + b t) - (a run(s) + b run(t))|| over random pairs of basis inputs."""
    layout = Layout(protocol)
    gate = protocol_gate(protocol, u)
    pairs = message_pairs(protocol)
    worst = 0.0
    for _ in range(trials):
        (x1, y1), (x2, y2) = (pairs[k] for k in rng.integers(len(pairs), size=2))
        s = basis_input(protocol, layout, x1, y1).amplitudes
        t = basis_input(protocol, layout, x2, y2).amplitudes
        c = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        mix = c[0] * s + c[1] * t
        mix_state = PureState(num_qubits=layout.num_qubits, amplitudes=mix / np.linalg.norm(mix))
        out_mix = execute(protocol, mix_state, layout, gate).amplitudes * np.linalg.norm(mix)
        out_s = execute(protocol, PureState(num_qubits=layout.num_qubits, amplitudes=s), layout, gate).amplitudes
        out_t = execute(protocol, PureState(num_qubits=layout.num_qubits, amplitudes=t), layout, gate).amplitudes
        worst = max(worst, float(np.linalg.norm(out_mix - (c[0] * out_s + c[1] * out_t))))
    return worst
