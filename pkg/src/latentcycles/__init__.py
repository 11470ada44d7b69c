"""Bayesian discovery of linear causal models with disjoint cycles and
Gaussian latent confounders."""

__version__ = "0.1.0"

from .kernels import Hyperparameters
from .model import (
    CausalParameters,
    Dataset,
    GroundTruthGraph,
    StabilityError,
    ValidationError,
    generate_data,
    scenario_parameters,
)
from .moves import MoveConfig
from .sampler import (
    ChainConfig,
    ChainError,
    PosteriorSummary,
    diagnostics,
    extract_graph,
    initialize_state,
    run_chain,
    summarize,
    sweep,
)
from .metrics import (
    RecoveryReport,
    admissible_stable_permutations,
    run_replicates,
    score_graph,
)

__all__ = [
    "CausalParameters",
    "ChainConfig",
    "ChainError",
    "Dataset",
    "GroundTruthGraph",
    "Hyperparameters",
    "MoveConfig",
    "PosteriorSummary",
    "RecoveryReport",
    "StabilityError",
    "ValidationError",
    "admissible_stable_permutations",
    "diagnostics",
    "extract_graph",
    "generate_data",
    "initialize_state",
    "run_chain",
    "run_replicates",
    "scenario_parameters",
    "score_graph",
    "summarize",
    "sweep",
]
