"""Gibbs sampler over a variable-dimension model.

One sweep, given the current model ``k``:

1. redraw ``theta^(k)`` from its posterior under model ``k`` and draw the
   neighbour blocks ``theta^(k+1)``, ``theta^(k-1)`` through the bridge;
2. draw the auxiliary index ``u``, equal to ``k+1`` with probability ``q``
   and to ``k`` otherwise;
3. draw the new model ``j`` from the two candidates ``{u-1, u}`` with
   probabilities proportional to the jump weights.

No dimension-matching transform is involved, hence no Jacobian.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bridges import BridgePair
from .model import (
    ContractViolation,
    ImpossibleStateError,
    ModelSpec,
    check_block,
    check_index,
    log_joint,
    log_likelihood_and_model_prior,
    sample_prior,
)
from .rng import RNG_ALGORITHM, make_rng

NEG_INF = -math.inf


@dataclass(frozen=True)
class MoveLaw:
    """Law of ``u`` given ``k``: ``k+1`` with probability ``q``, else ``k``."""

    q: float

    def __post_init__(self):
        if not 0.0 < self.q < 1.0:
            raise ValueError(f"q must lie strictly between 0 and 1, got {self.q}")

    @property
    def log_q(self) -> float:
        return math.log(self.q)

    @property
    def log_1mq(self) -> float:
        return math.log1p(-self.q)


@dataclass(frozen=True)
class MHConfig:
    """Random-walk Metropolis fallback for models without an exact sampler."""

    steps: int = 5
    step_size: float = 0.1

    def __post_init__(self):
        if self.steps < 0:
            raise ValueError("mh steps must be nonnegative")
        if np.any(np.asarray(self.step_size) < 0):
            raise ValueError("mh step_size must be nonnegative")


@dataclass
class SweepState:
    k: int
    theta: np.ndarray


@dataclass(frozen=True)
class JumpDecision:
    u: int
    candidates: tuple[int, int]
    log_weights: tuple[float, float]
    chosen: int
    mode: str


@dataclass(frozen=True)
class ChainRecord:
    iteration: int
    k: int
    theta: np.ndarray
    log_joint: float
    jumped: bool


@dataclass
class ChainOutput:
    records: list[ChainRecord]
    seed: Optional[int] = None
    chain: int = 0
    algorithm: str = "gibbs"
    rng_algorithm: str = RNG_ALGORITHM
    config_hash: Optional[str] = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.records)

    @property
    def ks(self) -> np.ndarray:
        return np.fromiter((r.k for r in self.records), dtype=int, count=len(self.records))

    @property
    def jumped(self) -> np.ndarray:
        return np.fromiter((r.jumped for r in self.records), dtype=bool, count=len(self.records))


# ---------------------------------------------------------------------------
# Step 1: within-model update
# ---------------------------------------------------------------------------

def within_model_update(spec: ModelSpec, y, state: SweepState, mh_config: MHConfig, rng) -> np.ndarray:
    """Refresh ``theta`` at fixed ``k``.

    Uses the model's exact conditional sampler when it has one, otherwise
    ``mh_config.steps`` random-walk Metropolis steps on the posterior of model ``k``.
    """
    k = state.k
    if spec.exact_conditional_sampler is not None:
        theta = np.asarray(spec.exact_conditional_sampler(y, k, rng), dtype=float)
        if theta.shape != (spec.dim(k),):
            raise ContractViolation(
                f"exact sampler returned shape {theta.shape} for model {k} (dim {spec.dim(k)})"
            )
        return theta
    return rw_metropolis(spec, y, state.theta, k, mh_config, rng)


def rw_metropolis(spec: ModelSpec, y, theta, k: int, mh_config: MHConfig, rng) -> np.ndarray:
    theta = np.array(theta, dtype=float)
    step = np.broadcast_to(np.asarray(mh_config.step_size, dtype=float), theta.shape)

    def log_target(t):
        return spec.log_likelihood(y, t, k) + spec.log_prior_param(t, k)

    current = log_target(theta)
    for _ in range(mh_config.steps):
        proposal = theta + step * rng.standard_normal(theta.shape[0])
        proposed = log_target(proposal)
        log_u = math.log(rng.random() or np.finfo(float).tiny)
        if proposed == NEG_INF and current == NEG_INF:
            accept = True
        else:
            accept = log_u < proposed - current
        if accept:
            theta, current = proposal, proposed
    return theta


# ---------------------------------------------------------------------------
# Steps 2 and 3: the jump
# ---------------------------------------------------------------------------

def sample_u(k: int, law: MoveLaw, rng) -> int:
    """``k+1`` if a uniform draw falls below ``q``, else ``k``."""
    return k + 1 if rng.random() < law.q else k


def jump_candidates(k: int, u: int) -> tuple[int, int]:
    if u == k + 1:
        return k, k + 1
    if u == k:
        return k - 1, k
    raise ValueError(f"u must be k or k+1 (k={k}, u={u})")


def jump_log_weights(
    spec: ModelSpec,
    y,
    bridge: BridgePair,
    k: int,
    u: int,
    theta_k,
    theta_nbr,
    law: MoveLaw,
    mode: str = "general",
    log_weight_offset: float = 0.0,
) -> tuple[float, float]:
    """Unnormalized log-probabilities of the two candidates, lower model first.

    With ``u = k+1`` the candidates are ``k`` (weight ``q``) and ``k+1``
    (weight ``1-q``); with ``u = k`` they are ``k-1`` (weight ``q``) and ``k``
    (weight ``1-q``). In ``general`` mode each candidate's full joint is
    multiplied by the bridge density of reaching the other block from it.
    ``balanced`` mode is valid only for balanced bridges, whose parameter
    prior and bridge terms cancel, leaving likelihood times model prior.
    A candidate outside ``[k_min, k_max]`` gets ``-inf``; ``theta_nbr`` is
    then ignored and may be ``None``.

    ``log_weight_offset`` is a fault-injection hook for testing the kernel
    verifier: it is added to the stay weight when ``u = k+1``.
    """
    if mode not in ("general", "balanced"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "balanced" and not bridge.balanced:
        raise ValueError(f"balanced weights need a balanced bridge, got {bridge!r}")
    check_index(spec, k)
    low_k, high_k = jump_candidates(k, u)
    # the block that belongs to each candidate
    if u == k + 1:
        low_theta, high_theta = theta_k, theta_nbr
    else:
        low_theta, high_theta = theta_nbr, theta_k

    # bridge terms only exist when the opposite candidate is a real model
    both = spec.in_range(low_k) and spec.in_range(high_k)
    w_low = w_high = NEG_INF
    if spec.in_range(low_k):
        if mode == "general":
            w_low = law.log_q + log_joint(spec, y, low_theta, low_k)
            if both:
                w_low += bridge.log_density_up(low_theta, high_theta, low_k)
        else:
            w_low = law.log_q + log_likelihood_and_model_prior(spec, y, low_theta, low_k)
    if spec.in_range(high_k):
        if mode == "general":
            w_high = law.log_1mq + log_joint(spec, y, high_theta, high_k)
            if both:
                w_high += bridge.log_density_down(high_theta, low_theta, high_k)
        else:
            w_high = law.log_1mq + log_likelihood_and_model_prior(spec, y, high_theta, high_k)

    if log_weight_offset and u == k + 1:
        w_low += log_weight_offset
    if w_low == NEG_INF and w_high == NEG_INF:
        raise ImpossibleStateError(f"both jump candidates {low_k, high_k} have zero density")
    return w_low, w_high


def jump_probabilities(log_weights) -> np.ndarray:
    """Normalize a pair of log-weights; ``-inf`` entries get probability 0."""
    w0, w1 = (float(w) for w in log_weights)
    if w0 == NEG_INF and w1 == NEG_INF:
        raise ImpossibleStateError("both jump candidates have zero density")
    if w0 == NEG_INF:
        return np.array([0.0, 1.0])
    if w1 == NEG_INF:
        return np.array([1.0, 0.0])
    # logistic of the log-odds, evaluated on the side that cannot overflow
    d = w1 - w0
    if d > 0:
        e = math.exp(-d)
        p0 = e / (1.0 + e)
        return np.array([p0, 1.0 / (1.0 + e)])
    e = math.exp(d)
    return np.array([1.0 / (1.0 + e), e / (1.0 + e)])


def choose_j(log_weights, candidates, rng) -> int:
    """Pick the first candidate when a uniform draw falls below its probability."""
    p_first = jump_probabilities(log_weights)[0]
    return candidates[0] if rng.random() < p_first else candidates[1]


def default_mode(bridge: BridgePair) -> str:
    return "balanced" if bridge.balanced else "general"


def sweep(
    spec: ModelSpec,
    y,
    bridge: BridgePair,
    law: MoveLaw,
    state: SweepState,
    mh_config: MHConfig,
    rng,
    mode: Optional[str] = None,
    iteration: int = 0,
    log_weight_offset: float = 0.0,
) -> tuple[SweepState, ChainRecord, JumpDecision]:
    mode = mode or default_mode(bridge)
    k = state.k
    check_index(spec, k)
    check_block(spec, state.theta, k)

    theta_k = within_model_update(spec, y, state, mh_config, rng)
    theta_up = bridge.sample_up(theta_k, k, rng)[0] if k < spec.k_max else None
    theta_down = bridge.sample_down(theta_k, k, rng)[0] if k > spec.k_min else None

    u = sample_u(k, law, rng)
    theta_nbr = theta_up if u == k + 1 else theta_down
    weights = jump_log_weights(
        spec, y, bridge, k, u, theta_k, theta_nbr, law, mode, log_weight_offset
    )
    candidates = jump_candidates(k, u)
    j = choose_j(weights, candidates, rng)

    theta_j = theta_k if j == k else theta_nbr
    new_state = SweepState(j, theta_j)
    record = ChainRecord(iteration, j, theta_j, log_joint(spec, y, theta_j, j), j != k)
    decision = JumpDecision(u, candidates, weights, j, mode)
    return new_state, record, decision


def initial_state(spec: ModelSpec, init: Optional[SweepState], rng) -> SweepState:
    if init is None:
        return SweepState(spec.k_min, sample_prior(spec, spec.k_min, rng))
    check_index(spec, init.k)
    return SweepState(init.k, check_block(spec, init.theta, init.k))


def run_chain(
    spec: ModelSpec,
    y,
    bridge: BridgePair,
    law: MoveLaw,
    n_sweeps: int,
    burn_in: int = 0,
    init: Optional[SweepState] = None,
    seed: int = 0,
    mh_config: Optional[MHConfig] = None,
    mode: Optional[str] = None,
    chain: int = 0,
) -> ChainOutput:
    """Run ``n_sweeps`` sweeps and keep the records after ``burn_in``.

    Sweeps are numbered from 1. The chain starts at ``init`` or, by default,
    at ``k_min`` with ``theta`` drawn from its prior.
    """
    if not n_sweeps > burn_in >= 0:
        raise ValueError(f"need n_sweeps > burn_in >= 0, got {n_sweeps}, {burn_in}")
    mh_config = mh_config or MHConfig()
    rng = make_rng(seed, chain)
    state = initial_state(spec, init, rng)
    records = []
    for it in range(1, n_sweeps + 1):
        state, record, _ = sweep(spec, y, bridge, law, state, mh_config, rng, mode, it)
        if it > burn_in:
            records.append(record)
    return ChainOutput(records, seed=seed, chain=chain, algorithm="gibbs")
