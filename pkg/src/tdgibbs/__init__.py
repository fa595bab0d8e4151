"""Gibbs sampling across models of varying dimension, with a reversible jump baseline."""
__version__ = "0.1.0"

from .bridges import BridgePair, check_balance, gaussian_bridge, prior_birth_bridge
from .diagnostics import ChainSummary, effective_sample_size, summarize, tv_distance
from .gibbs import (
    ChainOutput,
    ChainRecord,
    JumpDecision,
    MHConfig,
    MoveLaw,
    SweepState,
    choose_j,
    jump_log_weights,
    run_chain,
    sample_u,
    sweep,
    within_model_update,
)
from .model import ModelSpec, log_joint, validate_spec
from .rjmcmc import RJConfig, rj_step, run_rj_chain
from .testbeds import grid_toy_make, polyreg_exact_posterior, polyreg_make
from .verify import build_transition_matrix, invariance_report, stationary_distribution
