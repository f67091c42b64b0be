"""Independent oracles shared by the test modules.

Everything here is deliberately written against plain probability vectors
and small hand-built matrices, never through the library paths it checks.
"""

import math

import numpy as np


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -(p * math.log(p) + (1.0 - p) * math.log(1.0 - p))


def shannon_entropy(probs) -> float:
    return float(-sum(p * math.log(p) for p in probs if p > 0.0))


def kl_divergence(p, q) -> float:
    return float(sum(pi * math.log(pi / qi) for pi, qi in zip(p, q) if pi > 0.0))


def ket(*bits) -> np.ndarray:
    """Computational-basis ket of qubits, e.g. ket(0, 1) = |01>."""
    v = np.array([1.0], dtype=complex)
    for b in bits:
        v = np.kron(v, np.eye(2)[b])
    return v


def projector(vec) -> np.ndarray:
    v = np.asarray(vec, dtype=complex)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


BELL_PHI = (ket(0, 0) + ket(1, 1)) / math.sqrt(2)
PSI_PLUS = (ket(0, 1) + ket(1, 0)) / math.sqrt(2)

CNOT = np.array(
    [
        [1, 0, 0, 0],
        [0, 1, 0, 0],
        [0, 0, 0, 1],
        [0, 0, 1, 0],
    ],
    dtype=complex,
)

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)

SWAP = np.array(
    [
        [1, 0, 0, 0],
        [0, 0, 1, 0],
        [0, 1, 0, 0],
        [0, 0, 0, 1],
    ],
    dtype=complex,
)
