"""Models with known answers.

``polyreg`` is polynomial order selection with a conjugate Gaussian prior and
known noise, so the posterior over the order is available in closed form.
The grid toys are fully discrete and small enough to enumerate every state.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .model import (
    GridPrior,
    IndependentNormal,
    LOG_2PI,
    ModelSpec,
    model_prior_from_weights,
    uniform_model_prior,
)

# coefficients of the quadratic the polyreg data are simulated from
POLYREG_TRUE_COEFS = (0.3, -0.8, 1.1)


@dataclass(frozen=True)
class PolyRegData:
    x: np.ndarray
    y: np.ndarray
    sigma: float

    def __post_init__(self):
        if len(self.x) < 1 or len(self.x) != len(self.y):
            raise ValueError("need at least one (x, y) pair and matching lengths")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    @property
    def n(self) -> int:
        return len(self.x)

    def design(self, k: int) -> np.ndarray:
        """Columns ``x**0 .. x**(k-1)``."""
        return np.vander(self.x, k, increasing=True)


class _PolyRegPosterior:
    """Cached conjugate posterior of the coefficients for each order."""

    def __init__(self, data: PolyRegData, prior_sd: float, k_max: int):
        self.data = data
        self.prior_sd = prior_sd
        self._designs = {k: data.design(k) for k in range(1, k_max + 1)}
        self._moments = {}

    def design(self, k):
        return self._designs[k]

    def moments(self, k):
        """Posterior mean and lower Cholesky factor of the posterior covariance."""
        if k not in self._moments:
            X = self._designs[k]
            s2 = self.data.sigma ** 2
            precision = X.T @ X / s2 + np.eye(k) / self.prior_sd ** 2
            cov = np.linalg.inv(precision)
            cov = 0.5 * (cov + cov.T)
            mean = cov @ (X.T @ self.data.y) / s2
            self._moments[k] = (mean, np.linalg.cholesky(cov))
        return self._moments[k]


def simulate_polyreg_data(seed: int, n: int, sigma: float) -> PolyRegData:
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1.0, 1.0, size=n)
    mean = np.polynomial.polynomial.polyval(x, POLYREG_TRUE_COEFS)
    return PolyRegData(x, mean + sigma * rng.standard_normal(n), float(sigma))


def polyreg_spec(data: PolyRegData, k_max: int, prior_sd: float = 1.0) -> ModelSpec:
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    post = _PolyRegPosterior(data, prior_sd, k_max)
    priors = {k: IndependentNormal(k, 0.0, prior_sd) for k in range(1, k_max + 1)}
    new_coef = IndependentNormal(1, 0.0, prior_sd)
    log_norm = -0.5 * data.n * (LOG_2PI + 2 * math.log(data.sigma))
    inv_2s2 = 0.5 / data.sigma ** 2

    def log_likelihood(y, theta, k):
        r = y.y - post.design(k) @ theta
        return log_norm - inv_2s2 * float(r @ r)

    def log_prior_param(theta, k):
        return priors[k].logpdf(theta)

    def exact_conditional_sampler(y, k, rng):
        mean, chol = post.moments(k)
        return mean + chol @ np.asarray(rng.standard_normal(k), dtype=float)

    spec = ModelSpec(
        k_min=1,
        k_max=k_max,
        dim=lambda k: k,
        log_likelihood=log_likelihood,
        log_prior_param=log_prior_param,
        log_prior_model=uniform_model_prior(1, k_max),
        exact_conditional_sampler=exact_conditional_sampler,
        block_prior=lambda k: priors[1] if k == 1 else new_coef,
        name="polyreg",
        info={"posterior": post},
    )
    return spec


def polyreg_make(seed: int = 42, n: int = 30, sigma: float = 0.3, k_max: int = 5,
                 prior_sd: float = 1.0) -> tuple[PolyRegData, ModelSpec]:
    """Simulate data from a fixed quadratic and build the order-selection model.

    Model ``k`` has ``k`` coefficients (degree ``k-1``), iid Normal(0, prior_sd**2)
    priors, Gaussian noise of known ``sigma`` and a uniform prior on ``1..k_max``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    data = simulate_polyreg_data(seed, n, sigma)
    return data, polyreg_spec(data, k_max, prior_sd)


def polyreg_posterior_moments(data: PolyRegData, spec: ModelSpec, k: int):
    """Closed-form posterior mean and covariance of the coefficients of model ``k``."""
    mean, chol = spec.info["posterior"].moments(k)
    return mean.copy(), chol @ chol.T


def polyreg_log_marginal_likelihood(data: PolyRegData, prior_sd: float, k: int) -> float:
    """``log p(y | k)``: y ~ Normal(0, sigma^2 I + prior_sd^2 X X^T)."""
    X = data.design(k)
    cov = data.sigma ** 2 * np.eye(data.n) + prior_sd ** 2 * (X @ X.T)
    chol = np.linalg.cholesky(cov)
    z = np.linalg.solve(chol, data.y)
    return float(-0.5 * data.n * LOG_2PI - np.sum(np.log(np.diag(chol))) - 0.5 * z @ z)


def polyreg_exact_posterior(data: PolyRegData, spec: ModelSpec) -> np.ndarray:
    """Exact ``pi(k | y)`` over ``k_min..k_max`` of a polyreg model."""
    prior_sd = spec.info["posterior"].prior_sd
    logs = np.array([
        polyreg_log_marginal_likelihood(data, prior_sd, k) + spec.log_prior_model(k)
        for k in spec.indices
    ])
    return np.exp(logs - logsumexp(logs))


# ---------------------------------------------------------------------------
# Discrete grid toys
# ---------------------------------------------------------------------------

@dataclass
class GridToySpec:
    """Discrete model: ``dim(k) = k`` coordinates on a grid of ``G`` values.

    ``log_lik`` maps ``(k, grid indices)`` to the tabulated log-likelihood.
    The toy itself plays the role of the dataset.
    """

    name: str
    K: int
    values: np.ndarray
    coord_log_weights: np.ndarray
    model_prior: np.ndarray
    log_lik: dict
    spec: ModelSpec = field(init=False, repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self._index = {v: i for i, v in enumerate(self.values.tolist())}
        self._priors = {k: GridPrior(k, self.values, self.coord_log_weights)
                        for k in range(1, self.K + 1)}
        self._conditionals = {}
        self.spec = ModelSpec(
            k_min=1,
            k_max=self.K,
            dim=lambda k: k,
            log_likelihood=lambda y, theta, k: y.log_likelihood(theta, k),
            log_prior_param=lambda theta, k: self._priors[k].logpdf(theta),
            log_prior_model=model_prior_from_weights(self.model_prior),
            exact_conditional_sampler=lambda y, k, rng: y.sample_conditional(k, rng),
            block_prior=lambda k: self._priors[1],
            name=f"grid:{self.name}",
        )

    @property
    def y(self) -> "GridToySpec":
        return self

    @property
    def G(self) -> int:
        return len(self.values)

    @property
    def n_states(self) -> int:
        return sum(self.G ** k for k in range(1, self.K + 1))

    def indices_of(self, theta) -> tuple | None:
        try:
            return tuple(self._index[v] for v in np.asarray(theta, dtype=float).tolist())
        except KeyError:
            return None

    def log_likelihood(self, theta, k) -> float:
        idx = self.indices_of(theta)
        if idx is None or len(idx) != k:
            return -math.inf
        return self.log_lik[(k, idx)]

    def states(self):
        """All ``(k, theta)`` states, ordered by ``k`` then grid index."""
        for k in range(1, self.K + 1):
            for idx in itertools.product(range(self.G), repeat=k):
                yield k, self.values[list(idx)]

    def log_target(self, k, theta) -> float:
        s = self.spec
        return (s.log_likelihood(self, theta, k) + s.log_prior_param(theta, k)) + s.log_prior_model(k)

    def target_marginal(self) -> np.ndarray:
        """Normalized ``p(y | theta, k) pi_k(theta) pi(k)`` over :meth:`states`."""
        logs = np.array([self.log_target(k, t) for k, t in self.states()])
        return np.exp(logs - logsumexp(logs))

    def target_k(self) -> np.ndarray:
        """Exact ``pi(k | y)`` for ``k = 1..K``."""
        p = self.target_marginal()
        ks = np.array([k for k, _ in self.states()])
        return np.array([p[ks == k].sum() for k in range(1, self.K + 1)])

    def conditional(self, k):
        """``(thetas, probabilities)`` of the posterior of ``theta`` under model ``k``."""
        if k not in self._conditionals:
            thetas = [self.values[list(idx)] for idx in itertools.product(range(self.G), repeat=k)]
            logs = np.array([self.spec.log_likelihood(self, t, k) + self.spec.log_prior_param(t, k)
                             for t in thetas])
            probs = np.exp(logs - logsumexp(logs))
            self._conditionals[k] = (thetas, probs, np.cumsum(probs))
        thetas, probs, _ = self._conditionals[k]
        return thetas, probs

    def sample_conditional(self, k, rng) -> np.ndarray:
        thetas, _ = self.conditional(k)
        cdf = self._conditionals[k][2]
        i = int(np.searchsorted(cdf, rng.random(), side="right"))
        return thetas[min(i, len(thetas) - 1)].copy()


def _tabulate(K, G, fn):
    return {(k, idx): float(fn(k, idx))
            for k in range(1, K + 1) for idx in itertools.product(range(G), repeat=k)}


def _random_table(K, G, seed):
    rng = np.random.default_rng(seed)
    table = {}
    for k in range(1, K + 1):
        for idx in itertools.product(range(G), repeat=k):
            table[(k, idx)] = float(rng.uniform(-2.0, 0.0))
    return table


GRID_PRESETS = ("tiny", "symmetric", "pair", "small")


def grid_toy_make(preset_name: str) -> GridToySpec:
    """Named discrete presets.

    ``tiny``: K=3, G=3, 39 states, random tabulated likelihoods.
    ``symmetric``: the ``tiny`` layout with a constant likelihood.
    ``pair``: K=2, G=1, two states, checkable by hand.
    ``small``: K=4, G=3, 120 states.
    """
    values = np.array([-1.0, 0.0, 1.0])
    coord = np.log([0.25, 0.5, 0.25])
    if preset_name == "tiny":
        return GridToySpec("tiny", 3, values, coord, np.array([0.5, 0.3, 0.2]),
                           _random_table(3, 3, seed=20241015))
    if preset_name == "symmetric":
        return GridToySpec("symmetric", 3, values, coord, np.array([0.5, 0.3, 0.2]),
                           _tabulate(3, 3, lambda k, idx: -1.0))
    if preset_name == "pair":
        return GridToySpec("pair", 2, np.array([0.0]), np.array([0.0]), np.array([0.6, 0.4]),
                           {(1, (0,)): math.log(0.2), (2, (0, 0)): math.log(0.5)})
    if preset_name == "small":
        return GridToySpec("small", 4, values, coord, np.array([0.4, 0.3, 0.2, 0.1]),
                           _random_table(4, 3, seed=7))
    raise KeyError(f"unknown grid preset {preset_name!r}; choose from {GRID_PRESETS}")
