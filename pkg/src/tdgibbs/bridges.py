"""Conditional kernels linking parameter blocks of adjacent models.

A bridge supplies ``theta^(k+1) | theta^(k)`` (up) and ``theta^(k-1) | theta^(k)``
(down), with sampling and density evaluation. Both shipped families append
fresh trailing coordinates on the way up and drop them on the way down.
The down move is a point mass on the retained coordinates and has log-density
0 against the same product measure the up density is taken on, so general
jump weights stay comparable without any Jacobian.
"""
from __future__ import annotations

import math
import re

import numpy as np

from .model import (
    GridPrior,
    IndependentNormal,
    ModelIndexError,
    ModelSpec,
    sample_prior,
)


class BridgeConstructionError(ValueError):
    pass


class BridgePair:
    """Interface for up/down kernels. Subclass to add a new family.

    ``k`` is always the model index of the block being moved *from*.
    ``enumerate_up``/``enumerate_down`` are only needed for exact kernel
    verification on discrete models.
    """

    balanced = False
    name = "bridge"

    def sample_up(self, theta, k, rng):
        raise NotImplementedError

    def sample_down(self, theta, k, rng):
        raise NotImplementedError

    def log_density_up(self, theta_from, theta_to, k) -> float:
        raise NotImplementedError

    def log_density_down(self, theta_from, theta_to, k) -> float:
        raise NotImplementedError

    def enumerate_up(self, theta, k):
        raise NotImplementedError(f"{self.name} cannot enumerate its up kernel")

    def enumerate_down(self, theta, k):
        raise NotImplementedError(f"{self.name} cannot enumerate its down kernel")

    def __repr__(self):
        return f"<{type(self).__name__} {self.name} balanced={self.balanced}>"


class AppendDropBridge(BridgePair):
    """Up appends a block drawn from ``kernel(k+1)``; down drops the trailing block."""

    def __init__(self, spec: ModelSpec, kernel, balanced: bool, name: str):
        self.spec = spec
        self.kernel = kernel
        self.balanced = balanced
        self.name = name

    def sample_up(self, theta, k, rng):
        block = self.kernel(k + 1)
        new = block.sample(rng)
        return np.concatenate([theta, new]), block.logpdf(new)

    def sample_down(self, theta, k, rng):
        return np.array(theta[: self.spec.dim(k - 1)]), 0.0

    def log_density_up(self, theta_from, theta_to, k) -> float:
        d = len(theta_from)
        if len(theta_to) != self.spec.dim(k + 1) or not np.array_equal(theta_to[:d], theta_from):
            return -math.inf
        return self.kernel(k + 1).logpdf(theta_to[d:])

    def log_density_down(self, theta_from, theta_to, k) -> float:
        d = self.spec.dim(k - 1)
        if len(theta_to) != d or not np.array_equal(theta_from[:d], theta_to):
            return -math.inf
        return 0.0

    def enumerate_up(self, theta, k):
        block = self.kernel(k + 1)
        if not getattr(block, "discrete", False):
            raise NotImplementedError(f"{self.name} has a continuous up kernel")
        for new, logp in block.enumerate():
            yield np.concatenate([theta, new]), logp

    def enumerate_down(self, theta, k):
        yield np.array(theta[: self.spec.dim(k - 1)]), 0.0


def _check_nested(spec: ModelSpec, n_points: int = 5) -> None:
    if spec.block_prior is None:
        raise BridgeConstructionError(f"{spec.name} declares no nested block prior")
    rng = np.random.default_rng(0)
    for k in range(spec.k_min + 1, spec.k_max + 1):
        d = spec.dim(k - 1)
        block = spec.block_prior(k)
        if block.size != spec.dim(k) - d:
            raise BridgeConstructionError(f"block_prior({k}) has the wrong size")
        for _ in range(n_points):
            theta = sample_prior(spec, k, rng)
            full = spec.log_prior_param(theta, k)
            split = spec.log_prior_param(theta[:d], k - 1) + block.logpdf(theta[d:])
            if not math.isclose(full, split, rel_tol=1e-9, abs_tol=1e-9):
                raise BridgeConstructionError(
                    f"prior of model {k} does not factorize over model {k - 1} "
                    f"({full} vs {split})"
                )


def prior_birth_bridge(spec: ModelSpec) -> AppendDropBridge:
    """New coordinates drawn from their own prior block.

    The pair satisfies ``p_up(theta' | theta) pi_{k-1}(theta) = p_down(theta | theta') pi_k(theta')``
    identically, so it is flagged balanced.
    """
    _check_nested(spec)
    return AppendDropBridge(spec, spec.block_prior, balanced=True, name="prior_birth")


def gaussian_bridge(spec: ModelSpec, tau: float) -> AppendDropBridge:
    """New coordinates drawn from Normal(0, tau**2).

    On grid-valued models the normal shape is discretized onto the same grid.
    """
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    tau = float(tau)
    cache = {}

    def kernel(level):
        if level not in cache:
            size = spec.dim(level) - spec.dim(level - 1)
            prior = spec.block_prior(level) if spec.block_prior is not None else None
            if isinstance(prior, GridPrior):
                cache[level] = GridPrior(size, prior.values, -0.5 * (prior.values / tau) ** 2)
            else:
                cache[level] = IndependentNormal(size, 0.0, tau)
        return cache[level]

    for k in range(spec.k_min + 1, spec.k_max + 1):
        if spec.dim(k) <= spec.dim(k - 1):
            raise BridgeConstructionError("gaussian bridge needs strictly increasing dim(k)")
    return AppendDropBridge(spec, kernel, balanced=False, name=f"gaussian({tau!r})")


def check_balance(bridge: BridgePair, spec: ModelSpec, k: int, n_points: int, rng) -> float:
    """Largest log-space residual of the detailed-balance identity between ``k-1`` and ``k``.

    Pairs are drawn with ``theta^(k-1)`` from its prior and ``theta^(k)`` from
    the up kernel.
    """
    if not spec.k_min < k <= spec.k_max:
        raise ModelIndexError(
            f"no downward bridge at k={k}; need {spec.k_min} < k <= {spec.k_max}"
        )
    if n_points < 1:
        raise ValueError("n_points must be at least 1")
    worst = 0.0
    for _ in range(n_points):
        lower = sample_prior(spec, k - 1, rng)
        upper, log_up = bridge.sample_up(lower, k - 1, rng)
        lhs = log_up + spec.log_prior_param(lower, k - 1)
        rhs = bridge.log_density_down(upper, lower, k) + spec.log_prior_param(upper, k)
        if lhs == rhs:
            continue
        worst = max(worst, abs(lhs - rhs))
    return worst


_GAUSSIAN = re.compile(r"^gaussian\(\s*([^)]+?)\s*\)$")


def parse_bridge_name(name: str) -> tuple[str, float | None]:
    """``"prior_birth"`` -> ``("prior_birth", None)``; ``"gaussian(2.0)"`` -> ``("gaussian", 2.0)``."""
    name = name.strip()
    if name == "prior_birth":
        return "prior_birth", None
    m = _GAUSSIAN.match(name)
    if m:
        try:
            return "gaussian", float(m.group(1))
        except ValueError:
            pass
    raise ValueError(f"unknown bridge {name!r}; expected 'prior_birth' or 'gaussian(tau)'")


def bridge_from_name(spec: ModelSpec, name: str) -> BridgePair:
    family, tau = parse_bridge_name(name)
    if family == "prior_birth":
        return prior_birth_bridge(spec)
    return gaussian_bridge(spec, tau)
