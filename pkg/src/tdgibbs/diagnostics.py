"""Chain summaries: posterior over k, switch rate, effective sample size."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np


@dataclass(frozen=True)
class ChainSummary:
    posterior_k: dict
    switch_rate: float
    ess_k: float
    n_sweeps: int

    def posterior_vector(self, ks: Sequence[int]) -> np.ndarray:
        """Frequencies on ``ks`` (zero for models never visited)."""
        return np.array([self.posterior_k.get(k, 0.0) for k in ks])


def autocorrelation(x) -> np.ndarray:
    """Normalized autocorrelation at lags ``0..n-1`` (FFT, biased estimator)."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    x = x - x.mean()
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, size)
    acov = np.fft.irfft(f * np.conj(f), size)[:n]
    if acov[0] <= 0:
        return np.zeros(n)
    return acov / acov[0]


def effective_sample_size(x) -> float:
    """Geyer initial positive sequence estimate, capped at ``len(x)``.

    Sums of adjacent autocorrelation pairs are accumulated until the first
    nonpositive pair. A constant series carries no autocorrelation
    information and gets ``len(x)``.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    if n == 0:
        raise ValueError("empty series")
    rho = autocorrelation(x)
    if not rho.any():
        return float(n)
    pairs = rho[: n - n % 2].reshape(-1, 2).sum(axis=1)
    nonpositive = np.flatnonzero(pairs <= 0)
    m = nonpositive[0] if len(nonpositive) else len(pairs)
    tau = -1.0 + 2.0 * pairs[:m].sum()
    return float(n / max(tau, 1.0))


def summarize(chain) -> ChainSummary:
    """Summarize a :class:`~tdgibbs.gibbs.ChainOutput` (or a list of records)."""
    records = getattr(chain, "records", chain)
    if len(records) == 0:
        raise ValueError("cannot summarize an empty chain")
    ks = np.array([r.k for r in records])
    jumped = np.array([r.jumped for r in records], dtype=float)
    values, counts = np.unique(ks, return_counts=True)
    posterior = {int(k): float(c / len(ks)) for k, c in zip(values, counts)}
    return ChainSummary(posterior, float(jumped.mean()), effective_sample_size(ks), len(ks))


def tv_distance(p, q) -> float:
    """Total variation distance between two distributions on the same support.

    Accepts sequences (same length) or mappings (same keys).
    """
    if isinstance(p, Mapping) or isinstance(q, Mapping):
        if not (isinstance(p, Mapping) and isinstance(q, Mapping)) or set(p) != set(q):
            raise ValueError("support mismatch")
        keys = sorted(p)
        p, q = [p[k] for k in keys], [q[k] for k in keys]
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"support mismatch: {p.shape} vs {q.shape}")
    for name, v in (("p", p), ("q", q)):
        if np.any(v < 0) or abs(v.sum() - 1.0) > 1e-9:
            raise ValueError(f"{name} is not a probability vector")
    return float(0.5 * np.abs(p - q).sum())
