"""Thermalizing collision machine with an exactly reversible transcript.

A system qubit repeatedly collides with fresh reservoir qubits through a
two-qubit gate.  Two simulation modes exist on purpose:

* reduced mode tracks only the 2-dim system state, which is exact because
  every collision partner is fresh and therefore uncorrelated with the
  system at the moment of impact;
* joint mode retains the full (system + all ancillas) state, capped at 12
  qubits, so the collisions can be undone exactly by replaying the inverse
  gates in reverse order.

The contrast between the two is the point: the forward reduced dynamics
looks irreversible, yet the transcript plus the joint state recovers the
initial system state to machine precision.  Scramble the replay order and
the recovery fails.
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    DensityOperator,
    UnitaryOperator,
    _entropy_of_matrix,
    trace_distance,
)

JOINT_DIM_CAP = 2**12
EXACT_DISTANCE_FLOOR = 1e-14

_SWAP = np.array(
    [
        [1, 0, 0, 0],
        [0, 0, 1, 0],
        [0, 1, 0, 0],
        [0, 0, 0, 1],
    ],
    dtype=complex,
)


def partial_swap_unitary(theta: float) -> UnitaryOperator:
    """cos(theta) I + i sin(theta) SWAP; unitary for every real theta."""
    return UnitaryOperator(np.cos(theta) * np.eye(4, dtype=complex) + 1j * np.sin(theta) * _SWAP)


@dataclass(frozen=True)
class ReservoirSpec:
    """Fresh-ancilla reservoir: one qubit state repeated ``count`` times, or
    an explicit per-collision tuple for an inhomogeneous reservoir."""

    ancilla_state: DensityOperator
    count: int
    ancilla_states: tuple[DensityOperator, ...] | None = None

    def __post_init__(self):
        if self.ancilla_state.dim != 2:
            raise ValueError("ancilla state must be a qubit")
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.ancilla_states is not None:
            if len(self.ancilla_states) != self.count:
                raise ValueError("ancilla_states length must equal count")
            if any(s.dim != 2 for s in self.ancilla_states):
                raise ValueError("all ancilla states must be qubits")

    @property
    def homogeneous(self) -> bool:
        return self.ancilla_states is None

    def state_at(self, k: int) -> DensityOperator:
        return self.ancilla_state if self.ancilla_states is None else self.ancilla_states[k]


@dataclass(frozen=True)
class CollisionTranscript:
    """Ordered record of every collision, sufficient for exact reversal."""

    system_initial: DensityOperator
    steps: tuple[tuple[int, UnitaryOperator], ...]

    def __post_init__(self):
        indices = [i for i, _ in self.steps]
        if indices != list(range(len(indices))):
            raise ValueError("collision indices must be contiguous from 0")
        if any(u.dim != 4 for _, u in self.steps):
            raise ValueError("collision gates must act on two qubits")


@dataclass(frozen=True)
class TrajectoryRecord:
    """Per-collision system state, entropy and distance to the incoming
    ancilla; index 0 is the initial point."""

    states: tuple[DensityOperator, ...]
    entropies: tuple[float, ...]
    distances_to_ancilla: tuple[float, ...]
    homogeneous: bool

    def __post_init__(self):
        n = len(self.states)
        if n < 1 or len(self.entropies) != n or len(self.distances_to_ancilla) != n:
            raise ValueError("trajectory fields must have equal nonzero length")


def run_collisions(
    system_init: DensityOperator,
    spec: ReservoirSpec,
    gate: UnitaryOperator,
) -> tuple[TrajectoryRecord, CollisionTranscript]:
    """Reduced-mode trajectory: rho_{k+1} = tr_anc[gate (rho_k x xi_k) gate+].

    The pre-collision pair state is product by construction because each
    ancilla is fresh.
    """
    if system_init.dim != 2:
        raise ValueError("system must be a qubit")
    if gate.dim != 4:
        raise ValueError("gate must act on two qubits")
    g = gate.matrix
    rho = system_init.matrix
    states = [system_init]
    entropies = [_entropy_of_matrix(rho)]
    distances = [trace_distance(system_init, spec.state_at(0))]
    steps = []
    for k in range(spec.count):
        xi = spec.state_at(k)
        joint = g @ np.kron(rho, xi.matrix) @ g.conj().T
        rho = np.einsum("ikjk->ij", joint.reshape(2, 2, 2, 2))
        state = DensityOperator(rho)
        states.append(state)
        entropies.append(_entropy_of_matrix(rho))
        distances.append(trace_distance(state, xi))
        steps.append((k, gate))
    record = TrajectoryRecord(
        states=tuple(states),
        entropies=tuple(entropies),
        distances_to_ancilla=tuple(distances),
        homogeneous=spec.homogeneous,
    )
    return record, CollisionTranscript(system_initial=system_init, steps=tuple(steps))


# ---------------------------------------------------------------------------
# exact joint-state simulation
# ---------------------------------------------------------------------------

def _apply_pair_unitary(joint: np.ndarray, u4: np.ndarray, n_qubits: int, a: int, b: int) -> np.ndarray:
    """U rho U+ with U a two-qubit gate on qubit positions (a, b)."""
    letters = string.ascii_letters
    if 2 * n_qubits + 4 > len(letters):
        raise ValueError("too many qubits for einsum contraction")
    t = joint.reshape([2] * (2 * n_qubits))
    u = u4.reshape(2, 2, 2, 2)

    def contract(tensor, op, i, j):
        subs = list(letters[: 2 * n_qubits])
        out = list(subs)
        op_subs = [letters[2 * n_qubits], letters[2 * n_qubits + 1], subs[i], subs[j]]
        out[i], out[j] = op_subs[0], op_subs[1]
        subscripts = "".join(op_subs) + "," + "".join(subs) + "->" + "".join(out)
        return np.einsum(subscripts, op, tensor)

    t = contract(t, u, a, b)  # ket side
    t = contract(t, u.conj(), n_qubits + a, n_qubits + b)  # bra side
    d = 2**n_qubits
    return t.reshape(d, d)


def _reduce_to_system(joint: np.ndarray, n_qubits: int) -> np.ndarray:
    rest = 2 ** (n_qubits - 1)
    return np.einsum("abcb->ac", joint.reshape(2, rest, 2, rest))


def run_collisions_joint(
    system_init: DensityOperator,
    spec: ReservoirSpec,
    gate: UnitaryOperator,
    dim_cap: int = JOINT_DIM_CAP,
) -> tuple[TrajectoryRecord, CollisionTranscript, DensityOperator]:
    """Joint-mode trajectory retaining the full post-collision state.

    Ancillas are attached lazily, with the system as qubit 0 and collision k
    on qubit k + 1.  Also returns the final joint state so callers can check
    global-entropy conservation.
    """
    if system_init.dim != 2:
        raise ValueError("system must be a qubit")
    if gate.dim != 4:
        raise ValueError("gate must act on two qubits")
    joint_dim = 2 ** (spec.count + 1)
    if joint_dim > dim_cap:
        raise ValueError(f"joint dimension {joint_dim} exceeds the cap {dim_cap}")
    g = gate.matrix
    joint = system_init.matrix
    states = [system_init]
    entropies = [_entropy_of_matrix(joint)]
    distances = [trace_distance(system_init, spec.state_at(0))]
    steps = []
    for k in range(spec.count):
        xi = spec.state_at(k)
        joint = np.kron(joint, xi.matrix)
        joint = _apply_pair_unitary(joint, g, k + 2, 0, k + 1)
        reduced = DensityOperator(_reduce_to_system(joint, k + 2))
        states.append(reduced)
        entropies.append(_entropy_of_matrix(reduced.matrix))
        distances.append(trace_distance(reduced, xi))
        steps.append((k, gate))
    record = TrajectoryRecord(
        states=tuple(states),
        entropies=tuple(entropies),
        distances_to_ancilla=tuple(distances),
        homogeneous=spec.homogeneous,
    )
    transcript = CollisionTranscript(system_initial=system_init, steps=tuple(steps))
    return record, transcript, DensityOperator(joint)


def reverse_collisions(
    transcript: CollisionTranscript,
    spec: ReservoirSpec,
    order: Sequence[int] | None = None,
    dim_cap: int = JOINT_DIM_CAP,
) -> DensityOperator:
    """Replay inverse gates on the exact joint state and return the recovered
    system state.

    The forward pass is re-simulated jointly from the transcript, then the
    inverses are applied in the given order (default: exact reverse).  Any
    other order demonstrates how bookkeeping, not dynamics, is what makes
    the machine look irreversible.
    """
    n = len(transcript.steps)
    n_qubits = n + 1
    if 2**n_qubits > dim_cap:
        raise ValueError(f"joint dimension {2 ** n_qubits} exceeds the cap {dim_cap}")
    if n != spec.count:
        raise ValueError("transcript length and reservoir count disagree")
    replay = list(range(n - 1, -1, -1)) if order is None else [int(i) for i in order]
    if sorted(replay) != list(range(n)):
        raise ValueError("order must be a permutation of the collision indices")

    joint = transcript.system_initial.matrix
    for k, (_, gate) in enumerate(transcript.steps):
        joint = np.kron(joint, spec.state_at(k).matrix)
        joint = _apply_pair_unitary(joint, gate.matrix, k + 2, 0, k + 1)
    for k in replay:
        gate = transcript.steps[k][1]
        joint = _apply_pair_unitary(joint, gate.matrix.conj().T, n_qubits, 0, k + 1)
    reduced = joint
    for _ in range(n):
        d = reduced.shape[0] // 2
        reduced = np.einsum("aibi->ab", reduced.reshape(d, 2, d, 2))
    return DensityOperator(reduced)


@dataclass(frozen=True)
class ConvergenceReport:
    final_distance: float
    rate: float | None
    residual: float | None
    exact: bool


def convergence_report(trajectory: TrajectoryRecord) -> ConvergenceReport:
    """Least-squares fit of ln(distance) against collision index.

    Distances at or below 1e-14 count as exact convergence and are excluded
    from the fit; inhomogeneous reservoirs skip the rate fit entirely.
    """
    if len(trajectory.distances_to_ancilla) < 3:
        raise ValueError("need a trajectory of length >= 3 to fit a rate")
    distances = np.asarray(trajectory.distances_to_ancilla)
    final = float(distances[-1])
    if not trajectory.homogeneous:
        return ConvergenceReport(final_distance=final, rate=None, residual=None, exact=False)
    mask = distances > EXACT_DISTANCE_FLOOR
    if mask.sum() < 2:
        return ConvergenceReport(final_distance=final, rate=None, residual=None, exact=True)
    ks = np.flatnonzero(mask).astype(float)
    logs = np.log(distances[mask])
    slope, intercept = np.polyfit(ks, logs, 1)
    resid = float(np.sqrt(np.mean((slope * ks + intercept - logs) ** 2)))
    return ConvergenceReport(final_distance=final, rate=float(slope), residual=resid, exact=False)
