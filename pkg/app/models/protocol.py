"""
Scripted communication protocols and their audit reports.

Registers (qubit order, 1-based labels assigned in this order):

    A1  w = max(n_a, n_b)   Alice's message in, Bob's message out
    A3  n_a                 Alice's coherent copy (audit only)
    A2  ancilla_a           Alice's ancillas / resource half
    B1  w                   Bob's message in, Alice's message out
    B3  n_b                 Bob's coherent copy (audit only)
    B2  ancilla_b           Bob's ancillas / resource half

Messages are zero-padded: x occupies the leading n_a qubits of A1, y the
leading n_b qubits of B1.

Step targets name register qubits, e.g. "A1[0]" or "B2[1]".
"""
import re
from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

MAX_REGISTER_QUBITS = 12

LOCAL_GATE_ARITY: Dict[str, int] = {
    "I": 1, "X": 1, "Y": 1, "Z": 1, "H": 1, "S": 1, "SDG": 1,
    "CNOT": 2, "CZ": 2, "SWAP": 2,
}

_LABEL = re.compile(r"^(A1|A2|A3|B1|B2|B3)\[(\d+)\]$")


def parse_label(label: str) -> Tuple[str, int]:
    m = _LABEL.match(label.strip())
    if not m:
        raise ValueError(f"bad register label {label!r}; expected e.g. 'A1[0]'")
    return m.group(1), int(m.group(2))


def side_of(label: str) -> str:
    return "alice" if parse_label(label)[0].startswith("A") else "bob"


class ProtocolStep(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["alice", "bob", "interaction"]
    targets: List[str]
    gate: Optional[str] = None
    matrix: Optional[List[List[Tuple[float, float]]]] = None

    @model_validator(mode="after")
    def _check(self):
        if self.kind == "interaction":
            if self.gate is not None or self.matrix is not None:
                raise ValueError("interaction steps apply the protocol's gate; give no local gate")
            return self
        if (self.gate is None) == (self.matrix is None):
            raise ValueError("local steps need exactly one of gate, matrix")
        if self.gate is not None and self.gate.upper() not in LOCAL_GATE_ARITY:
            raise ValueError(f"unknown local gate {self.gate!r}")
        return self


class Protocol(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    description: str = ""
    gate: Optional[str] = Field(default=None, description="named gate the interaction steps assume")
    n_a: int = Field(ge=0)
    n_b: int = Field(ge=0)
    ancilla_a: int = Field(0, ge=0)
    ancilla_b: int = Field(0, ge=0)
    resource_pairs: List[Tuple[str, str]] = []
    resource_amplitudes: Optional[List[Tuple[float, float]]] = None
    steps: List[ProtocolStep] = []

    @property
    def width(self) -> int:
        return max(self.n_a, self.n_b)

    @property
    def t(self) -> int:
        return sum(1 for s in self.steps if s.kind == "interaction")

    @property
    def register_sizes(self) -> Dict[str, int]:
        return {
            "A1": self.width, "A3": self.n_a, "A2": self.ancilla_a,
            "B1": self.width, "B3": self.n_b, "B2": self.ancilla_b,
        }

    @property
    def num_qubits(self) -> int:
        return sum(self.register_sizes.values())

    @model_validator(mode="after")
    def _check(self):
        sizes = self.register_sizes
        if self.num_qubits > MAX_REGISTER_QUBITS:
            raise ValueError(f"register needs {self.num_qubits} qubits, limit is {MAX_REGISTER_QUBITS}")
        if self.width + self.n_a + self.ancilla_a == 0 or self.width + self.n_b + self.ancilla_b == 0:
            raise ValueError("both Alice and Bob need at least one qubit")

        def known(label: str) -> str:
            reg, idx = parse_label(label)
            if idx >= sizes[reg]:
                raise ValueError(f"{label} outside register {reg} of size {sizes[reg]}")
            return label

        for i, step in enumerate(self.steps):
            labels = [known(t) for t in step.targets]
            if len(set(labels)) != len(labels):
                raise ValueError(f"step {i}: repeated target")
            sides = [side_of(t) for t in labels]
            if step.kind == "interaction":
                if sides != ["alice", "bob"]:
                    raise ValueError(f"step {i}: interaction targets must be [Alice qubit, Bob qubit]")
            elif any(s != step.kind for s in sides):
                raise ValueError(f"step {i}: {step.kind} step touches the other side {labels}")
            if step.gate is not None and LOCAL_GATE_ARITY[step.gate.upper()] != len(labels):
                raise ValueError(f"step {i}: {step.gate} acts on {LOCAL_GATE_ARITY[step.gate.upper()]} qubit(s)")
            if step.matrix is not None and len(step.matrix) != 2 ** len(labels):
                raise ValueError(f"step {i}: matrix size does not match {len(labels)} target(s)")

        paired = set()
        for a, b in self.resource_pairs:
            if parse_label(a)[0] != "A2" or parse_label(b)[0] != "B2":
                raise ValueError(f"resource pair ({a}, {b}) must join A2 and B2")
            for q in (known(a), known(b)):
                if q in paired:
                    raise ValueError(f"{q} used in two resource pairs")
                paired.add(q)
        if self.resource_amplitudes is not None:
            if self.resource_pairs:
                raise ValueError("give resource_pairs or resource_amplitudes, not both")
            if len(self.resource_amplitudes) != 2 ** (self.ancilla_a + self.ancilla_b):
                raise ValueError("resource_amplitudes must cover A2 then B2")
        return self


class MessageRun(BaseModel):
    x: str
    y: str
    fidelity: float
    delta_e: float


class AuditReport(BaseModel):
    protocol: str
    gate: Optional[str]
    n_a: int
    n_b: int
    t: int
    runs: List[MessageRun]
    mean_delta_e_xy: float
    delta_e: float                      # superposition-of-messages run
    expected_delta_e: float             # (n_a + n_b) + mean_delta_e_xy
    identity_residual: float
    delta_e_per_use: Optional[float]    # delta_e / t
    message_rate: Optional[float]       # (n_a + n_b) / t
    e_u: Optional[float] = None
    e_u_minus: Optional[float] = None
    rate_bound_slack: Optional[float] = None   # e_u + e_u_minus - message_rate
