"""Identify combinatorially symmetric Markov chains from moments on a zero forcing set."""

from .chain import (
    MomentTable,
    RateMatrix,
    StochasticMatrix,
    Trajectory,
    ctmc_transition,
    estimate_moments,
    power_moments,
    random_chain_with_graph,
    rate_moments,
    simulate_trajectory,
    validate_rate,
    validate_stochastic,
)
from .exceptions import (
    DegenerateChainError,
    HitTimeoutError,
    HypothesisError,
    IdentificationError,
    InsufficientHorizonError,
    MatrixValidationError,
    NotCombinatoriallySymmetricError,
    NotZeroForcingError,
    SearchBoundError,
)
from .graph import (
    ForcingSequence,
    SimpleGraph,
    cycle_graph,
    forcing_closure,
    graph_of_matrix,
    grid_graph,
    is_combinatorially_symmetric,
    is_connected,
    is_zero_forcing_set,
    min_zero_forcing_set,
    path_graph,
    penta_sun,
)
from .reconstruct import (
    ReconstructionResult,
    ResidualReport,
    infer_neighbor,
    propagate_uncertainty,
    reconstruct,
    reconstruct_ctmc,
    reconstruct_dtmc,
    required_power_horizon,
    verify_reconstruction,
)

__version__ = "0.1.0"
