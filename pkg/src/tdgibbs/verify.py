"""Exact one-step transition matrices on enumerable models.

Every source of randomness in one sweep is summed out analytically: the exact
conditional draw of ``theta^(k)``, both bridge draws, ``u`` and ``j``. The
state is ``(k, theta^(k))``; neighbour blocks are regenerated each sweep, so
this pair is Markov under the implemented sampler.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg
from scipy.sparse.csgraph import connected_components

from .bridges import BridgePair
from .gibbs import MoveLaw, default_mode, jump_candidates, jump_log_weights, jump_probabilities
from .rjmcmc import (
    RJConfig,
    acceptance_probability,
    birth_log_ratio,
    death_log_ratio,
)
from .testbeds import GridToySpec

MAX_STATES = 10_000
INVARIANCE_TOL = 1e-10


class StateSpaceTooLarge(ValueError):
    pass


class ReducibleChainError(ValueError):
    pass


class ConvergenceError(ArithmeticError):
    def __init__(self, message, residual):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


@dataclass
class TransitionMatrix:
    matrix: np.ndarray
    states: list  # (k, grid index tuple) per row

    @property
    def n_states(self) -> int:
        return len(self.states)


def _state_key(toy: GridToySpec, k, theta):
    return k, toy.indices_of(theta)


def _gibbs_row(toy, bridge, law, k, index, mode, log_weight_offset) -> np.ndarray:
    spec, y = toy.spec, toy.y
    row = np.zeros(len(index))
    thetas, probs = toy.conditional(k)
    for theta_k, p_theta in zip(thetas, probs):
        ups = list(bridge.enumerate_up(theta_k, k)) if k < spec.k_max else [(None, 0.0)]
        downs = list(bridge.enumerate_down(theta_k, k)) if k > spec.k_min else [(None, 0.0)]
        for u, p_u in ((k + 1, law.q), (k, 1.0 - law.q)):
            neighbours = ups if u == k + 1 else downs
            for theta_nbr, log_p_nbr in neighbours:
                w = jump_log_weights(spec, y, bridge, k, u, theta_k, theta_nbr, law, mode,
                                     log_weight_offset)
                probs_j = jump_probabilities(w)
                base = p_theta * p_u * np.exp(log_p_nbr)
                for j, p_j in zip(jump_candidates(k, u), probs_j):
                    if p_j == 0.0:
                        continue
                    theta_j = theta_k if j == k else theta_nbr
                    row[index[_state_key(toy, j, theta_j)]] += base * p_j
    return row


def _rj_row(toy, bridge, cfg: RJConfig, k, theta, index, log_weight_offset) -> np.ndarray:
    spec, y = toy.spec, toy.y
    row = np.zeros(len(index))
    here = index[_state_key(toy, k, theta)]

    if k < spec.k_max:
        for proposal, log_q in bridge.enumerate_up(theta, k):
            a = acceptance_probability(
                birth_log_ratio(spec, y, bridge, cfg, theta, k, proposal, log_q,
                                log_weight_offset=log_weight_offset))
            p = cfg.p_birth * np.exp(log_q)
            row[index[_state_key(toy, k + 1, proposal)]] += p * a
            row[here] += p * (1.0 - a)
    else:
        row[here] += cfg.p_birth

    if k > spec.k_min:
        for proposal, log_q in bridge.enumerate_down(theta, k):
            a = acceptance_probability(
                death_log_ratio(spec, y, bridge, cfg, theta, k, proposal, log_q))
            p = cfg.p_death * np.exp(log_q)
            row[index[_state_key(toy, k - 1, proposal)]] += p * a
            row[here] += p * (1.0 - a)
    else:
        row[here] += cfg.p_death

    thetas, probs = toy.conditional(k)
    for theta_new, p in zip(thetas, probs):
        row[index[_state_key(toy, k, theta_new)]] += cfg.p_within * p
    return row


def build_transition_matrix(
    toy: GridToySpec,
    bridge: BridgePair,
    law: MoveLaw,
    algorithm: str = "gibbs",
    mode: Optional[str] = None,
    rj_config: Optional[RJConfig] = None,
    log_weight_offset: float = 0.0,
    max_states: int = MAX_STATES,
) -> TransitionMatrix:
    """Exact one-sweep (gibbs) or one-step (rj) transition matrix of ``toy``.

    ``log_weight_offset`` injects a fault into the jump weights (gibbs) or the
    birth acceptance ratio (rj); it exists so tests can show the verifier
    catches a wrong kernel.
    """
    if toy.n_states > max_states:
        raise StateSpaceTooLarge(f"{toy.n_states} states exceed the limit of {max_states}")
    states = [_state_key(toy, k, theta) for k, theta in toy.states()]
    index = {s: i for i, s in enumerate(states)}
    T = np.zeros((len(states), len(states)))

    if algorithm == "gibbs":
        mode = mode or default_mode(bridge)
        for (k, _), (i, (_, theta)) in zip(states, enumerate(toy.states())):
            T[i] = _gibbs_row(toy, bridge, law, k, index, mode, log_weight_offset)
        # the within-model redraw discards the incoming theta
        for k in toy.spec.indices:
            rows = T[[i for i, s in enumerate(states) if s[0] == k]]
            if np.max(np.abs(rows - rows[0])) > 1e-14:
                raise AssertionError(f"gibbs rows for k={k} depend on the source theta")
    elif algorithm == "rj":
        cfg = rj_config or RJConfig.from_move_law(law)
        for i, (k, theta) in enumerate(toy.states()):
            T[i] = _rj_row(toy, bridge, cfg, k, theta, index, log_weight_offset)
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}; expected 'gibbs' or 'rj'")

    check_stochastic(T)
    return TransitionMatrix(T, states)


def check_stochastic(T: np.ndarray, tol: float = 1e-12) -> None:
    if T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise ValueError("transition matrix must be square")
    if np.any(T < 0):
        raise ValueError("transition matrix has negative entries")
    worst = np.max(np.abs(T.sum(axis=1) - 1.0))
    if worst > tol:
        raise ValueError(f"rows do not sum to 1 (worst deviation {worst:.3e})")


def _as_array(T) -> np.ndarray:
    return T.matrix if isinstance(T, TransitionMatrix) else np.asarray(T, dtype=float)


def stationary_distribution(T, tol: float = 1e-13, max_iter: int = 10_000) -> np.ndarray:
    """Invariant distribution by power iteration on the lazy chain ``(I + T) / 2``.

    The lazy chain has the same invariant law and is aperiodic. The iteration
    matrix is squared after every step, so step ``n`` applies ``2**n``
    transitions; once that matrix has converged, plain steps polish the result.
    """
    T = _as_array(T)
    check_stochastic(T)
    n_comp, _ = connected_components(T > 0, directed=True, connection="strong")
    if n_comp != 1:
        raise ReducibleChainError(f"chain is reducible ({n_comp} communicating classes)")

    n = T.shape[0]
    lazy = 0.5 * (np.eye(n) + T)
    step = lazy
    pi = np.full(n, 1.0 / n)
    residual = np.inf
    for it in range(max_iter):
        pi = pi @ step
        pi /= pi.sum()
        residual = np.abs(pi @ T - pi).sum()
        if residual <= tol:
            return pi
        if it < 60:
            step = step @ step
            step /= step.sum(axis=1, keepdims=True)
        else:
            step = lazy
    raise ConvergenceError("power iteration did not converge", residual)


def stationary_by_eigen(T) -> np.ndarray:
    """Left eigenvector of ``T`` for the eigenvalue closest to 1 (cross-check)."""
    T = _as_array(T)
    values, vectors = linalg.eig(T.T)
    v = np.real(vectors[:, np.argmin(np.abs(values - 1.0))])
    return v / v.sum()


@dataclass
class InvarianceReport:
    l1_error: float
    passed: bool
    residual: float
    n_states: int
    preset: str
    bridge: str
    q: float
    algorithm: str
    tol: float = INVARIANCE_TOL

    def as_dict(self) -> dict:
        return {
            "preset": self.preset,
            "bridge": self.bridge,
            "q": self.q,
            "algorithm": self.algorithm,
            "n_states": self.n_states,
            "l1_error": self.l1_error,
            "stationary_residual": self.residual,
            "tol": self.tol,
            "pass": self.passed,
        }

    def key_values(self) -> str:
        return "\n".join(f"{k}={_fmt(v)}" for k, v in self.as_dict().items())

    def text(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (f"{verdict}: {self.algorithm} kernel on '{self.preset}' with {self.bridge}, "
                f"q={self.q}: |stationary - target|_1 = {self.l1_error:.3e} (tol {self.tol:.0e})")


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def invariance_report(
    toy: GridToySpec,
    bridge: BridgePair,
    law: MoveLaw,
    algorithm: str = "gibbs",
    mode: Optional[str] = None,
    log_weight_offset: float = 0.0,
    tol: float = INVARIANCE_TOL,
) -> InvarianceReport:
    """Compare the kernel's invariant law with the normalized target over ``(k, theta)``."""
    T = build_transition_matrix(toy, bridge, law, algorithm, mode,
                                log_weight_offset=log_weight_offset)
    pi = stationary_distribution(T)
    l1 = float(np.abs(pi - toy.target_marginal()).sum())
    residual = float(np.abs(pi @ T.matrix - pi).sum())
    return InvarianceReport(l1, l1 <= tol, residual, T.n_states, toy.name, bridge.name,
                            law.q, algorithm, tol)
