"""Birth/death reversible jump baseline driven by the same bridges as the Gibbs sampler.

The dimension-matching map keeps the retained coordinates as they are, so the
Jacobian is 1 and never appears.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .bridges import BridgePair
from .gibbs import (
    ChainOutput,
    ChainRecord,
    MHConfig,
    MoveLaw,
    SweepState,
    initial_state,
    within_model_update,
)
from .model import ModelSpec, check_block, check_index, log_joint
from .rng import make_rng


def _log(p: float) -> float:
    return math.log(p) if p > 0 else -math.inf


@dataclass(frozen=True)
class RJConfig:
    p_birth: float = 0.25
    p_death: float = 0.25

    def __post_init__(self):
        if self.p_birth < 0 or self.p_death < 0 or self.p_birth + self.p_death > 1 + 1e-15:
            raise ValueError(f"invalid move probabilities {self.p_birth}, {self.p_death}")

    @property
    def p_within(self) -> float:
        return max(0.0, 1.0 - self.p_birth - self.p_death)

    @classmethod
    def from_move_law(cls, law: MoveLaw) -> "RJConfig":
        """Half the moves change dimension, split up/down in the ratio ``q : 1-q``."""
        return cls(p_birth=law.q / 2, p_death=(1 - law.q) / 2)


def acceptance_probability(log_ratio: float) -> float:
    if math.isnan(log_ratio):
        return 0.0
    return 1.0 if log_ratio >= 0 else math.exp(log_ratio)


def birth_log_ratio(spec, y, bridge, cfg: RJConfig, theta, k, theta_new, log_q_up,
                    current_log_joint=None, log_weight_offset=0.0) -> float:
    current = log_joint(spec, y, theta, k) if current_log_joint is None else current_log_joint
    return (
        log_joint(spec, y, theta_new, k + 1)
        + _log(cfg.p_death)
        + bridge.log_density_down(theta_new, theta, k + 1)
        - current
        - _log(cfg.p_birth)
        - log_q_up
        + log_weight_offset
    )


def death_log_ratio(spec, y, bridge, cfg: RJConfig, theta, k, theta_new, log_q_down,
                    current_log_joint=None) -> float:
    current = log_joint(spec, y, theta, k) if current_log_joint is None else current_log_joint
    return (
        log_joint(spec, y, theta_new, k - 1)
        + _log(cfg.p_birth)
        + bridge.log_density_up(theta_new, theta, k - 1)
        - current
        - _log(cfg.p_death)
        - log_q_down
    )


def rj_step(
    spec: ModelSpec,
    y,
    bridge: BridgePair,
    cfg: RJConfig,
    state: SweepState,
    mh_config: MHConfig,
    rng,
    iteration: int = 0,
) -> tuple[SweepState, ChainRecord]:
    """One birth, death or within-model move.

    Birth at ``k_max`` and death at ``k_min`` are proposed and rejected
    without drawing anything.
    """
    k = state.k
    check_index(spec, k)
    theta = check_block(spec, state.theta, k)
    move = rng.random()

    new_k, new_theta = k, theta
    if move < cfg.p_birth:
        if k < spec.k_max:
            proposal, log_q = bridge.sample_up(theta, k, rng)
            log_a = birth_log_ratio(spec, y, bridge, cfg, theta, k, proposal, log_q)
            if rng.random() < acceptance_probability(log_a):
                new_k, new_theta = k + 1, proposal
    elif move < cfg.p_birth + cfg.p_death:
        if k > spec.k_min:
            proposal, log_q = bridge.sample_down(theta, k, rng)
            log_a = death_log_ratio(spec, y, bridge, cfg, theta, k, proposal, log_q)
            if rng.random() < acceptance_probability(log_a):
                new_k, new_theta = k - 1, proposal
    else:
        new_theta = within_model_update(spec, y, state, mh_config, rng)

    record = ChainRecord(iteration, new_k, new_theta,
                         log_joint(spec, y, new_theta, new_k), new_k != k)
    return SweepState(new_k, new_theta), record


def run_rj_chain(
    spec: ModelSpec,
    y,
    bridge: BridgePair,
    cfg: RJConfig,
    n_sweeps: int,
    burn_in: int = 0,
    init: Optional[SweepState] = None,
    seed: int = 0,
    mh_config: Optional[MHConfig] = None,
    chain: int = 0,
) -> ChainOutput:
    if not n_sweeps > burn_in >= 0:
        raise ValueError(f"need n_sweeps > burn_in >= 0, got {n_sweeps}, {burn_in}")
    mh_config = mh_config or MHConfig()
    rng = make_rng(seed, chain)
    state = initial_state(spec, init, rng)
    records = []
    for it in range(1, n_sweeps + 1):
        state, record = rj_step(spec, y, bridge, cfg, state, mh_config, rng, it)
        if it > burn_in:
            records.append(record)
    return ChainOutput(records, seed=seed, chain=chain, algorithm="rj")
