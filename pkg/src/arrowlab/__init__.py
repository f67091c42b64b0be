"""arrowlab: entropy balance, correlation arrows, collision-model
thermalization and fluctuation relations for small bipartite quantum systems."""

from .core import (
    RNG_ALGORITHM,
    BipartitionLayout,
    DensityOperator,
    Hamiltonian,
    RandomSource,
    UnitaryOperator,
    basis_ket,
    evolve,
    fidelity_and_bures,
    gibbs_state,
    haar_random_unitary,
    identity_unitary,
    maximally_mixed,
    mutual_information,
    partial_trace,
    pure_state,
    purify,
    random_density_operator,
    relative_entropy,
    tensor_product,
    trace_distance,
    unitary_from_hamiltonian,
    von_neumann_entropy,
)
from .arrow import (
    TWO_QUBITS,
    Alignment,
    EntropyBalanceReport,
    SweepGrid,
    SweepPoint,
    UnitarySearchConfig,
    UnitarySearchResult,
    bures_neighborhood_sample,
    classical_correlated_demo,
    classical_correlated_state,
    classical_decorrelating_unitary,
    decorrelating_unitary,
    entropy_balance,
    near_product_state,
    schrodinger_check,
    search_entropy_decreasing_unitary,
    weak_coupling_sweep,
)
from .collisions import (
    CollisionTranscript,
    ConvergenceReport,
    ReservoirSpec,
    TrajectoryRecord,
    convergence_report,
    partial_swap_unitary,
    reverse_collisions,
    run_collisions,
    run_collisions_joint,
)
from .fluctuation import (
    CrooksReport,
    EffectiveTemperatureReport,
    EnergyProjector,
    HeatFlowTrial,
    JointOutcomeDistribution,
    TwoPointProtocol,
    backward_distribution,
    crooks_check,
    damping_heat,
    effective_temperatures,
    eigen_projectors,
    entropy_production_identity,
    exchange_interaction,
    forward_distribution,
    free_energy,
    free_energy_difference,
    heat_flow_trial,
    jarzynski_check,
    measurement_symmetry_check,
    random_protocol,
)

__version__ = "0.1.0"
