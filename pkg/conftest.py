"""
Shared fixtures for the root test suites.

    pytest -q
"""
import os

import numpy as np
import pytest

from app.models.capability import OptimizerConfig
from app.models.state import PureState
from app.services import protocols as protocol_lib

ROOT = os.path.dirname(os.path.abspath(__file__))
PROTOCOLS_DIR = os.path.join(ROOT, "protocols")

S2 = 1.0 / np.sqrt(2.0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def fast_config() -> OptimizerConfig:
    """Fewer restarts and oracle samples than the production defaults."""
    return OptimizerConfig(
        restarts=12,
        max_iters=3000,
        grad_tol=1e-7,
        fd_step=1e-6,
        seed=20240917,
        oracle_samples=20_000,
    )


@pytest.fixture(scope="session")
def protocols_loaded():
    protocol_lib.load_protocols(PROTOCOLS_DIR)
    return protocol_lib.get_protocols()


def bell_state() -> np.ndarray:
    return S2 * np.array([1, 0, 0, 1], dtype=np.complex128)


def state_from_bits(bits: str) -> PureState:
    return PureState.basis(bits)


def bell_on_middle() -> PureState:
    """|0>_1 (|00> + |11>)/sqrt(2) on qubits 2, 3, |0>_4."""
    amps = np.zeros(16, dtype=np.complex128)
    amps[int("0000", 2)] = S2
    amps[int("0110", 2)] = S2
    return PureState(num_qubits=4, amplitudes=amps)


def two_bell_pairs() -> PureState:
    """Bell(1, 3) (x) Bell(2, 4): two ebits across {1, 2} | {3, 4}."""
    amps = np.zeros(16, dtype=np.complex128)
    for a in (0, 1):
        for b in (0, 1):
            amps[int(f"{a}{b}{a}{b}", 2)] = 0.5
    return PureState(num_qubits=4, amplitudes=amps)
