"""Seeded random streams. One independent stream per (seed, chain index)."""
import numpy as np

RNG_ALGORITHM = "numpy.random.PCG64 seeded by SeedSequence(entropy=seed, spawn_key=(chain,))"


def make_rng(seed: int, chain: int = 0) -> np.random.Generator:
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(int(chain),))))
