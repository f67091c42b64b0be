"""Entropy balance under global unitaries and its deliberate violations.

The central identity: when a joint state starts as a product, the change in
the two local entropies under any global unitary equals the mutual
information of the final state, hence is non-negative.  This module computes
that balance, builds the canonical correlated states whose local entropies
can be pushed *down*, classifies the relative direction of the two local
arrows, and searches the unitary group for entropy-decreasing evolutions of
arbitrary correlated inputs.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg
import scipy.optimize

from .core import (
    BipartitionLayout,
    DensityOperator,
    Hamiltonian,
    RandomSource,
    UnitaryOperator,
    _entropy_of_matrix,
    _partial_trace_matrix,
    basis_ket,
    evolve,
    fidelity_and_bures,
    mutual_information,
    partial_trace,
    pure_state,
    unitary_from_hamiltonian,
    von_neumann_entropy,
)

PRODUCT_INPUT_TOL = 1e-9
ALIGNMENT_TOL = 1e-10
NON_PRODUCT_TOL = 1e-6
BALANCE_CONSISTENCY_TOL = 1e-12


class Alignment(str, Enum):
    """Relative direction of the two local entropy changes."""

    ALIGNED = "aligned"
    ANTI_ALIGNED = "anti-aligned"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class EntropyBalanceReport:
    """Local entropy changes of one joint state under one global unitary.

    ``sum`` is dS_S + dS_R; for product inputs it must equal the final
    mutual information (that equality is validated on construction).
    """

    ds_s: float
    ds_r: float
    sum: float
    mi_initial: float
    mi_final: float
    schrodinger_product: float
    product_input: bool

    def __post_init__(self):
        if abs(self.sum - (self.ds_s + self.ds_r)) > BALANCE_CONSISTENCY_TOL:
            raise ValueError("sum field is inconsistent with ds_s + ds_r")
        if self.product_input and abs(self.sum - self.mi_final) > PRODUCT_INPUT_TOL:
            raise ValueError(
                f"product input but sum - final mutual information = {self.sum - self.mi_final:.3e}"
            )


def entropy_balance(rho_joint: DensityOperator, layout: BipartitionLayout, u: UnitaryOperator) -> EntropyBalanceReport:
    """Evolve the joint state and report both local entropy changes."""
    if rho_joint.dim != layout.dim or u.dim != layout.dim:
        raise ValueError("state, layout and unitary dimensions must agree")
    mi_initial = mutual_information(rho_joint, layout)
    s_s0 = von_neumann_entropy(partial_trace(rho_joint, layout, "S"))
    s_r0 = von_neumann_entropy(partial_trace(rho_joint, layout, "R"))
    final = evolve(rho_joint, u)
    mi_final = mutual_information(final, layout)
    ds_s = von_neumann_entropy(partial_trace(final, layout, "S")) - s_s0
    ds_r = von_neumann_entropy(partial_trace(final, layout, "R")) - s_r0
    return EntropyBalanceReport(
        ds_s=ds_s,
        ds_r=ds_r,
        sum=ds_s + ds_r,
        mi_initial=mi_initial,
        mi_final=mi_final,
        schrodinger_product=ds_s * ds_r,
        product_input=mi_initial <= PRODUCT_INPUT_TOL,
    )


def schrodinger_check(report: EntropyBalanceReport, tol: float = ALIGNMENT_TOL) -> Alignment:
    """Classify whether the two local arrows point the same way."""
    if report.schrodinger_product > tol:
        return Alignment.ALIGNED
    if report.schrodinger_product < -tol:
        return Alignment.ANTI_ALIGNED
    return Alignment.DEGENERATE


# ---------------------------------------------------------------------------
# canonical two-qubit constructions
# ---------------------------------------------------------------------------

TWO_QUBITS = BipartitionLayout(2, 2)


def near_product_state(epsilon: float) -> DensityOperator:
    """(1 - eps)|00><00| + eps |psi+><psi+| with |psi+> = (|01> + |10>)/sqrt(2).

    Mutual information is 2 H2(eps/2) - H2(eps) in nats, strictly positive
    for eps in (0, 1].
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must be in [0, 1], got {epsilon}")
    ket00 = np.kron(basis_ket(2, 0), basis_ket(2, 0))
    psi_plus = (np.kron(basis_ket(2, 0), basis_ket(2, 1)) + np.kron(basis_ket(2, 1), basis_ket(2, 0))) / np.sqrt(2.0)
    m = (1.0 - epsilon) * np.outer(ket00, ket00) + epsilon * np.outer(psi_plus, psi_plus)
    return DensityOperator(m)


def decorrelating_unitary() -> UnitaryOperator:
    """Two-qubit unitary fixing |00> and |11> while mapping the triplet
    (|01>+|10>)/sqrt(2) -> |01> and the singlet (|01>-|10>)/sqrt(2) -> |10>.

    Applied to :func:`near_product_state` it produces an exact product state,
    so both correlations and the local entropy sum drop.
    """
    ket = [np.kron(basis_ket(2, a), basis_ket(2, b)) for a, b in ((0, 0), (0, 1), (1, 0), (1, 1))]
    triplet = (ket[1] + ket[2]) / np.sqrt(2.0)
    singlet = (ket[1] - ket[2]) / np.sqrt(2.0)
    u = (
        np.outer(ket[0], ket[0].conj())
        + np.outer(ket[1], triplet.conj())
        + np.outer(ket[2], singlet.conj())
        + np.outer(ket[3], ket[3].conj())
    )
    return UnitaryOperator(u)


def classical_correlated_state() -> DensityOperator:
    """Equal classical mixture of |00><00| and |11><11| (mutual information ln 2)."""
    ket00 = np.kron(basis_ket(2, 0), basis_ket(2, 0))
    ket11 = np.kron(basis_ket(2, 1), basis_ket(2, 1))
    return DensityOperator(0.5 * np.outer(ket00, ket00) + 0.5 * np.outer(ket11, ket11))


def classical_decorrelating_unitary() -> UnitaryOperator:
    """Maps |11> -> |10> and fixes |00>; completed unitarily by |10> -> |11>
    and |01> -> |01> (a controlled flip of R on S)."""
    u = np.zeros((4, 4), dtype=complex)
    u[0, 0] = 1.0  # |00> -> |00>
    u[1, 1] = 1.0  # |01> -> |01>
    u[3, 2] = 1.0  # |10> -> |11>
    u[2, 3] = 1.0  # |11> -> |10>
    return UnitaryOperator(u)


def classical_correlated_demo() -> EntropyBalanceReport:
    """Decorrelate two classically correlated bits; the entropy sum drops by ln 2."""
    return entropy_balance(classical_correlated_state(), TWO_QUBITS, classical_decorrelating_unitary())


# ---------------------------------------------------------------------------
# unitary-group search for entropy-decreasing evolutions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UnitarySearchConfig:
    """Knobs for the derivative-free search over generator coefficients."""

    max_iterations: int = 300
    convergence_tolerance: float = 1e-12
    restarts: int = 4
    rng: RandomSource = field(default_factory=lambda: RandomSource(0))

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.convergence_tolerance <= 0.0:
            raise ValueError("convergence_tolerance must be > 0")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")


@dataclass(frozen=True)
class UnitarySearchResult:
    unitary: UnitaryOperator
    achieved_sum: float
    report: EntropyBalanceReport
    best_restart: int
    parameter_count: int

    @property
    def improved(self) -> bool:
        return self.achieved_sum < 0.0


def hermitian_generator_basis(dim: int) -> np.ndarray:
    """Generalized Gell-Mann matrices plus I/sqrt(dim): dim^2 Hermitian
    matrices orthonormal under tr(A B).  They span the full unitary algebra,
    so exp(-i sum_k theta_k G_k) reaches every unitary up to global phase."""
    mats = [np.eye(dim, dtype=complex) / np.sqrt(dim)]
    for j in range(dim):
        for k in range(j + 1, dim):
            sym = np.zeros((dim, dim), dtype=complex)
            sym[j, k] = sym[k, j] = 1.0 / np.sqrt(2.0)
            mats.append(sym)
            anti = np.zeros((dim, dim), dtype=complex)
            anti[j, k] = -1j / np.sqrt(2.0)
            anti[k, j] = 1j / np.sqrt(2.0)
            mats.append(anti)
    for l in range(1, dim):
        diag = np.zeros((dim, dim), dtype=complex)
        diag[np.arange(l), np.arange(l)] = 1.0
        diag[l, l] = -float(l)
        mats.append(diag / np.sqrt(l * (l + 1)))
    return np.stack(mats)


def unitary_from_angles(theta: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """exp(-i sum_k theta_k G_k) via Hermitian eigendecomposition."""
    a = np.tensordot(theta, basis, axes=1)
    lam, v = np.linalg.eigh(a)
    return (v * np.exp(-1j * lam)) @ v.conj().T


def angles_from_unitary(u: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Coefficients theta with exp(-i sum theta_k G_k) = u (principal branch)."""
    t, q = scipy.linalg.schur(u, output="complex")
    a = (q * -np.angle(np.diag(t))) @ q.conj().T
    a = 0.5 * (a + a.conj().T)
    return np.real(np.tensordot(basis, a, axes=([1, 2], [1, 0])))


def _assignment_cells(dim_s: int, dim_r: int) -> list[tuple[int, ...]]:
    """Candidate placements of the descending spectrum on computational cells."""
    dim = dim_s * dim_r
    if dim <= 8:
        return list(itertools.permutations(range(dim)))
    # staircase heuristic for larger spaces: fill low (s + r) shells first
    order = sorted(range(dim), key=lambda i: (divmod(i, dim_r)[0] + divmod(i, dim_r)[1], i))
    return [tuple(order)]


def spectral_assignment_unitary(rho_joint: DensityOperator, layout: BipartitionLayout) -> np.ndarray:
    """Rotate the eigenbasis of the state onto computational basis cells,
    choosing the placement whose diagonal final state has the smallest sum of
    marginal entropies.  Used as the deterministic restart of the search."""
    lam, v = np.linalg.eigh(rho_joint.matrix)
    order = np.argsort(lam)[::-1]
    lam = np.clip(lam[order], 0.0, None)
    vecs = v[:, order]
    dim_s, dim_r = layout.dim_s, layout.dim_r
    best_cells, best_val = None, np.inf
    for cells in _assignment_cells(dim_s, dim_r):
        p_s = np.zeros(dim_s)
        p_r = np.zeros(dim_r)
        for weight, cell in zip(lam, cells):
            s, r = divmod(cell, dim_r)
            p_s[s] += weight
            p_r[r] += weight
        val = -np.sum(p_s[p_s > 0] * np.log(p_s[p_s > 0])) - np.sum(p_r[p_r > 0] * np.log(p_r[p_r > 0]))
        if val < best_val - 1e-15:
            best_val, best_cells = val, cells
    u = np.zeros((layout.dim, layout.dim), dtype=complex)
    for i, cell in enumerate(best_cells):
        u[cell, :] = vecs[:, i].conj()
    return u


def search_entropy_decreasing_unitary(
    rho_joint: DensityOperator,
    layout: BipartitionLayout,
    config: UnitarySearchConfig | None = None,
) -> UnitarySearchResult:
    """Minimize dS_S + dS_R over U(theta) = exp(-i sum theta_k G_k).

    Restart schedule: restart 0 starts from the spectral-assignment unitary
    (a deterministic feasible point that is exact for states whose spectrum
    factorizes), remaining restarts start from random coefficient draws.
    Each restart is polished with Nelder-Mead; the lowest recomputed entropy
    sum wins, ties broken by the lower restart index.  A result that never
    dips below zero is returned with a warning, not an error: finitely many
    iterations cannot refute the existence of a decreasing unitary.
    """
    if rho_joint.dim != layout.dim:
        raise ValueError("state and layout dimensions must agree")
    if mutual_information(rho_joint, layout) <= NON_PRODUCT_TOL:
        raise ValueError("input is a product state; local entropies cannot decrease")
    config = config or UnitarySearchConfig()
    dim = layout.dim
    basis = hermitian_generator_basis(dim)
    dim_s, dim_r = layout.dim_s, layout.dim_r

    rho = rho_joint.matrix
    s_local0 = _entropy_of_matrix(_partial_trace_matrix(rho, dim_s, dim_r, "S")) + _entropy_of_matrix(
        _partial_trace_matrix(rho, dim_s, dim_r, "R")
    )

    def objective(theta: np.ndarray) -> float:
        u = unitary_from_angles(theta, basis)
        final = u @ rho @ u.conj().T
        return (
            _entropy_of_matrix(_partial_trace_matrix(final, dim_s, dim_r, "S"))
            + _entropy_of_matrix(_partial_trace_matrix(final, dim_s, dim_r, "R"))
            - s_local0
        )

    starts = [angles_from_unitary(spectral_assignment_unitary(rho_joint, layout), basis)]
    for k in range(1, config.restarts):
        g = config.rng.child(k).generator()
        starts.append(g.normal(scale=np.pi / 4.0, size=dim * dim))

    best_theta, best_val, best_restart = None, np.inf, -1
    for idx, theta0 in enumerate(starts):
        res = scipy.optimize.minimize(
            objective,
            theta0,
            method="Nelder-Mead",
            options={
                "maxiter": config.max_iterations,
                "maxfev": 4 * config.max_iterations,
                "fatol": config.convergence_tolerance,
                "xatol": 1e-5,
                "adaptive": True,
            },
        )
        if res.fun < best_val:
            best_theta, best_val, best_restart = res.x, float(res.fun), idx

    u_best = UnitaryOperator(unitary_from_angles(best_theta, basis))
    report = entropy_balance(rho_joint, layout, u_best)
    if report.sum >= 0.0:
        warnings.warn("search did not find an entropy-decreasing unitary within its budget", stacklevel=2)
    return UnitarySearchResult(
        unitary=u_best,
        achieved_sum=report.sum,
        report=report,
        best_restart=best_restart,
        parameter_count=dim * dim,
    )


# ---------------------------------------------------------------------------
# perturbed product states and the weak-coupling map
# ---------------------------------------------------------------------------

def bures_neighborhood_sample(
    product: DensityOperator,
    layout: BipartitionLayout,
    delta: float,
    rng: RandomSource,
) -> DensityOperator:
    """A correlated state within Bures distance delta of the given product
    state, built by mixing in a random correlated pure state and bisecting
    on the mixing weight."""
    if delta < 1e-6:
        raise ValueError("delta below the 1e-6 numerical floor")
    if mutual_information(product, layout) > PRODUCT_INPUT_TOL:
        raise ValueError("reference state is not a product state")
    g = rng.generator()
    chi = None
    for _ in range(64):
        vec = g.standard_normal(layout.dim) + 1j * g.standard_normal(layout.dim)
        candidate = pure_state(vec)
        if mutual_information(candidate, layout) > 0.05:
            chi = candidate.matrix
            break
    if chi is None:
        raise RuntimeError("failed to draw a correlated perturbation")

    def mix(w: float) -> DensityOperator:
        return DensityOperator((1.0 - w) * product.matrix + w * chi)

    def distance(w: float) -> float:
        return fidelity_and_bures(mix(w), product)[1]

    if distance(1.0) <= delta:
        return mix(1.0)
    lo, hi = 0.0, 1.0  # distance(lo) <= delta < distance(hi), monotone in w
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if distance(mid) <= delta:
            lo = mid
        else:
            hi = mid
    if lo == 0.0:
        raise ValueError("delta too small to admit a correlated perturbation")
    sample = mix(lo)
    if mutual_information(sample, layout) <= 0.0:
        raise ValueError("delta too small to retain measurable correlations")
    return sample


@dataclass(frozen=True)
class SweepGrid:
    """Cartesian grid of coupling strengths, correlation strengths and times."""

    coupling_strengths: tuple[float, ...]
    correlation_strengths: tuple[float, ...]
    evolution_times: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "coupling_strengths", tuple(float(x) for x in self.coupling_strengths))
        object.__setattr__(self, "correlation_strengths", tuple(float(x) for x in self.correlation_strengths))
        object.__setattr__(self, "evolution_times", tuple(float(x) for x in self.evolution_times))
        for name in ("coupling_strengths", "correlation_strengths", "evolution_times"):
            values = getattr(self, name)
            if not values or not all(np.isfinite(v) for v in values):
                raise ValueError(f"{name} must be non-empty and finite")
        if any(not 0.0 <= e <= 1.0 for e in self.correlation_strengths):
            raise ValueError("correlation strengths must lie in [0, 1]")

    @property
    def size(self) -> int:
        return len(self.coupling_strengths) * len(self.correlation_strengths) * len(self.evolution_times)


@dataclass(frozen=True)
class SweepPoint:
    coupling: float
    epsilon: float
    time: float
    sum: float


def weak_coupling_sweep(
    h_local_s: Hamiltonian,
    h_local_r: Hamiltonian,
    h_int: Hamiltonian,
    grid: SweepGrid,
) -> list[SweepPoint]:
    """Entropy-sum phase map of the near-product family under
    exp(-i (H_S + H_R + g H_int) t) over the whole grid.

    At g = 0 the evolution is local and every sum vanishes; the eps = 0
    column is a product input so its sums are non-negative.  Rows come out
    in (g, eps, t) lexicographic grid order.
    """
    if h_local_s.dim != 2 or h_local_r.dim != 2 or h_int.dim != 4:
        raise ValueError("sweep expects qubit local Hamiltonians and a 4-dim interaction")
    h_local = np.kron(h_local_s.matrix, np.eye(2)) + np.kron(np.eye(2), h_local_r.matrix)
    states = {eps: near_product_state(eps) for eps in grid.correlation_strengths}
    points = []
    for g in grid.coupling_strengths:
        h_total = Hamiltonian(h_local + g * h_int.matrix)
        unitaries = {t: unitary_from_hamiltonian(h_total, t) for t in grid.evolution_times}
        for eps in grid.correlation_strengths:
            for t in grid.evolution_times:
                report = entropy_balance(states[eps], TWO_QUBITS, unitaries[t])
                points.append(SweepPoint(coupling=g, epsilon=eps, time=t, sum=report.sum))
    return points
