"""QUBO/Ising reformulation and solvers for energy-systems optimization.

Three problem families (quadratic assignment for facility location, single-
period unit commitment, minimum-cost heat matches) are reduced to penalty
QUBOs, solved classically (exhaustive, simulated annealing, tabu search,
decompose-and-stitch) or along a small statevector VQE path, and validated
against exact domain oracles.
"""

from .bench import (
    BenchReport,
    BenchRow,
    GenSpec,
    deviation_stats,
    gen_hens,
    gen_uc,
    run_bench,
)
from .errors import InfeasibleError, InternalCheckError, OracleSizeError, UsageError
from .gate import (
    AnsatzConfig,
    DiagonalHamiltonian,
    VqeConfig,
    VqeResult,
    ansatz_state,
    exact_ground,
    expectation,
    hamiltonian_from_ising,
    parameter_shift_gradient,
    sample_distribution,
    vqe_minimize,
)
from .hens import (
    DiscretizedHens,
    HensInstance,
    HensSolution,
    hens_decode,
    hens_discretize,
    hens_objective,
    hens_oracle,
    hens_to_qubo,
)
from .qap import (
    QapInfeasibility,
    QapInstance,
    QapSolution,
    parse_qaplib,
    qap_decode,
    qap_default_penalty,
    qap_objective,
    qap_oracle,
    qap_to_qubo,
)
from .qubo import (
    IsingModel,
    LinearExpr,
    Qubo,
    bits_from_spins,
    ising_to_qubo,
    quantize_coefficients,
    qubo_to_ising,
    spins_from_bits,
)
from .solvers import (
    DecompParams,
    SampleRecord,
    SampleSet,
    SaParams,
    TabuParams,
    brute_force,
    decompose_solve,
    simulated_anneal,
    solve,
    tabu_search,
)
from .uc import (
    DiscretizedUc,
    UcInstance,
    UcSolution,
    UcUnit,
    uc_choose_grids,
    uc_decode,
    uc_discretize,
    uc_dispatch_oracle,
    uc_grid_oracle,
    uc_objective,
    uc_oracle,
    uc_to_qubo,
)
from .varmap import PenaltyWeights, VarMap

__version__ = "0.1.0"
