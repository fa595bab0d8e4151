"""Transdimensional model abstraction.

A model is a family indexed by an integer ``k`` in ``[k_min, k_max]``. Model
``k`` owns a parameter vector of length ``dim(k)``, a likelihood, a prior on
that vector and a prior mass on ``k`` itself. Everything is kept in log space;
states with zero density evaluate to ``-inf`` rather than raising.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Iterator, Optional, Sequence

import numpy as np
from scipy.special import logsumexp

LOG_2PI = math.log(2.0 * math.pi)


class ContractViolation(ValueError):
    """A parameter block does not have the dimension its model requires."""


class ModelIndexError(ValueError):
    """A model index lies outside ``[k_min, k_max]``."""


class ImpossibleStateError(RuntimeError):
    """Every candidate of a jump has zero target density."""


# ---------------------------------------------------------------------------
# Priors for the coordinates a model adds on top of its predecessor
# ---------------------------------------------------------------------------

class IndependentNormal:
    """``size`` iid Normal(mean, sd**2) coordinates."""

    def __init__(self, size: int, mean: float = 0.0, sd: float = 1.0):
        if sd <= 0:
            raise ValueError(f"sd must be positive, got {sd}")
        self.size = int(size)
        self.mean = float(mean)
        self.sd = float(sd)
        self._log_norm = -0.5 * LOG_2PI - math.log(self.sd)

    def sample(self, rng) -> np.ndarray:
        return self.mean + self.sd * np.asarray(rng.standard_normal(self.size), dtype=float)

    def logpdf(self, x) -> float:
        z = (np.asarray(x, dtype=float) - self.mean) / self.sd
        return float(self.size * self._log_norm - 0.5 * np.dot(z, z))

    @property
    def discrete(self) -> bool:
        return False

    def __repr__(self):
        return f"IndependentNormal(size={self.size}, mean={self.mean}, sd={self.sd})"


class GridPrior:
    """``size`` iid coordinates on a finite grid of values.

    ``log_weights`` need not be normalized; they are normalized on construction.
    """

    def __init__(self, size: int, values: Sequence[float], log_weights: Sequence[float]):
        values = np.asarray(values, dtype=float)
        log_weights = np.asarray(log_weights, dtype=float)
        if values.ndim != 1 or values.shape != log_weights.shape:
            raise ValueError("values and log_weights must be 1-d arrays of equal length")
        if len(np.unique(values)) != len(values):
            raise ValueError("grid values must be distinct")
        self.size = int(size)
        self.values = values
        self.logp = log_weights - logsumexp(log_weights)
        self._cdf = np.cumsum(np.exp(self.logp))
        self._index = {v: i for i, v in enumerate(values.tolist())}

    @property
    def discrete(self) -> bool:
        return True

    def sample(self, rng) -> np.ndarray:
        out = np.empty(self.size)
        for i in range(self.size):
            idx = int(np.searchsorted(self._cdf, rng.random(), side="right"))
            out[i] = self.values[min(idx, len(self.values) - 1)]
        return out

    def logpdf(self, x) -> float:
        total = 0.0
        for v in np.asarray(x, dtype=float).tolist():
            i = self._index.get(v)
            if i is None:
                return -math.inf
            total += self.logp[i]
        return float(total)

    def enumerate(self) -> Iterator[tuple[np.ndarray, float]]:
        """Yield every block value with its log-probability."""
        for idx in itertools.product(range(len(self.values)), repeat=self.size):
            yield self.values[list(idx)], float(sum(self.logp[i] for i in idx))

    def __repr__(self):
        return f"GridPrior(size={self.size}, values={self.values.tolist()})"


# ---------------------------------------------------------------------------
# The model specification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelSpec:
    """Per-dimension likelihood and priors of a transdimensional model.

    ``block_prior(k)`` is optional. When given, the parameter prior factorizes
    over nested blocks: the prior of model ``k`` is the prior of model ``k-1``
    on the leading ``dim(k-1)`` coordinates times ``block_prior(k)`` on the
    trailing ones, and ``block_prior(k_min)`` covers the whole of model
    ``k_min``. Bridges that append and drop coordinates rely on it.
    """

    k_min: int
    k_max: int
    dim: Callable[[int], int]
    log_likelihood: Callable[[Any, np.ndarray, int], float]
    log_prior_param: Callable[[np.ndarray, int], float]
    log_prior_model: Callable[[int], float]
    exact_conditional_sampler: Optional[Callable[[Any, int, Any], np.ndarray]] = None
    block_prior: Optional[Callable[[int], Any]] = None
    name: str = "model"
    info: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def indices(self) -> range:
        return range(self.k_min, self.k_max + 1)

    def in_range(self, k: int) -> bool:
        return self.k_min <= k <= self.k_max

    @property
    def nested(self) -> bool:
        return self.block_prior is not None


def check_index(spec: ModelSpec, k: int) -> None:
    if not spec.in_range(k):
        raise ModelIndexError(f"model index {k} outside [{spec.k_min}, {spec.k_max}]")


def check_block(spec: ModelSpec, theta, k: int) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1 or theta.shape[0] != spec.dim(k):
        raise ContractViolation(
            f"parameter block of shape {theta.shape} does not match dim({k}) = {spec.dim(k)}"
        )
    return theta


def _finite_or_neg_inf(value: float, what: str) -> float:
    value = float(value)
    if math.isnan(value) or value == math.inf:
        raise ValueError(f"{what} returned {value}")
    return value


def log_joint(spec: ModelSpec, y, theta, k: int) -> float:
    """``log p(y | theta, k) + log pi_k(theta) + log pi(k)``, summed in that order."""
    check_index(spec, k)
    theta = check_block(spec, theta, k)
    ll = _finite_or_neg_inf(spec.log_likelihood(y, theta, k), "log_likelihood")
    lp = _finite_or_neg_inf(spec.log_prior_param(theta, k), "log_prior_param")
    lm = _finite_or_neg_inf(spec.log_prior_model(k), "log_prior_model")
    return (ll + lp) + lm


def log_likelihood_and_model_prior(spec: ModelSpec, y, theta, k: int) -> float:
    """``log p(y | theta, k) + log pi(k)``; the parameter prior is left out."""
    check_index(spec, k)
    theta = check_block(spec, theta, k)
    ll = _finite_or_neg_inf(spec.log_likelihood(y, theta, k), "log_likelihood")
    lm = _finite_or_neg_inf(spec.log_prior_model(k), "log_prior_model")
    return ll + lm


def sample_prior(spec: ModelSpec, k: int, rng) -> np.ndarray:
    """Draw ``theta`` from the parameter prior of model ``k`` (nested specs only)."""
    check_index(spec, k)
    if spec.block_prior is None:
        raise ContractViolation(f"{spec.name}: prior sampling needs block_prior")
    blocks = [spec.block_prior(level).sample(rng) for level in range(spec.k_min, k + 1)]
    return check_block(spec, np.concatenate(blocks), k)


def validate_spec(spec: ModelSpec, tol: float = 1e-12) -> list[str]:
    """Return a description of every violated invariant; empty if none."""
    if spec.k_min < 1:
        return [f"k_min is {spec.k_min}, must be at least 1"]
    if spec.k_min > spec.k_max:
        return ["k_min exceeds k_max"]

    violations = []
    mass = math.fsum(math.exp(spec.log_prior_model(k)) for k in spec.indices)
    if abs(mass - 1.0) > tol:
        violations.append(f"model prior mass {mass:.6g} ≠ 1")

    dims = [spec.dim(k) for k in spec.indices]
    if any(d < 0 for d in dims):
        violations.append("dim(k) is negative for some k")
    if any(b <= a for a, b in zip(dims, dims[1:])):
        violations.append("dim(k) is not strictly increasing in k")

    if spec.block_prior is not None:
        sizes = [spec.block_prior(k).size for k in spec.indices]
        expected = [dims[0]] + [b - a for a, b in zip(dims, dims[1:])]
        if sizes != expected:
            violations.append("block_prior sizes do not match dimension increments")
    return violations


# ---------------------------------------------------------------------------
# Model priors over k
# ---------------------------------------------------------------------------

def uniform_model_prior(k_min: int, k_max: int) -> Callable[[int], float]:
    log_mass = -math.log(k_max - k_min + 1)

    def log_prior_model(k: int) -> float:
        return log_mass if k_min <= k <= k_max else -math.inf

    return log_prior_model


def geometric_model_prior(
    p: float, k_min: int, k_max: int, renormalize: bool = True
) -> Callable[[int], float]:
    """Geometric prior ``P(k) = p (1-p)^(k-k_min)`` truncated to ``[k_min, k_max]``.

    With ``renormalize=False`` the truncated mass is left as is, which
    :func:`validate_spec` reports.
    """
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    logs = {k: math.log(p) + (k - k_min) * math.log1p(-p) for k in range(k_min, k_max + 1)}
    if renormalize:
        norm = float(logsumexp(list(logs.values())))
        logs = {k: v - norm for k, v in logs.items()}

    def log_prior_model(k: int) -> float:
        return logs.get(k, -math.inf)

    return log_prior_model


def model_prior_from_weights(weights: Sequence[float], k_min: int = 1) -> Callable[[int], float]:
    """Model prior proportional to ``weights``, whose first entry is ``k_min``."""
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or w.sum() <= 0:
        raise ValueError("model prior weights must be nonnegative with positive sum")
    with np.errstate(divide="ignore"):
        logs = np.log(w / w.sum())

    def log_prior_model(k: int) -> float:
        i = k - k_min
        return float(logs[i]) if 0 <= i < len(logs) else -math.inf

    return log_prior_model
