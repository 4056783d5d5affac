"""Counter-based RNG streams.

All randomness in the package flows through a root seed plus integer keys
(feature index, repetition index, group id, ...).  Streams derived this way
are independent of execution order, so parallel and serial runs agree.
"""
import numpy as np


def rng_for(seed: int, *keys: int) -> np.random.Generator:
    """Return a Generator for the stream identified by (seed, *keys)."""
    entropy = [int(seed)] + [int(k) for k in keys]
    if any(e < 0 for e in entropy):
        raise ValueError("seed and stream keys must be non-negative")
    return np.random.default_rng(np.random.SeedSequence(entropy))
