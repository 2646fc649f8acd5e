"""Deterministic random streams.

Every source of randomness in this package is a Philox substream addressed by
(seed, purpose tag, *indices). Philox is counter-based and its output is fixed
by the algorithm, so streams are reproducible across platforms, and distinct
purposes (data noise, shuffling, subsampling) never collide even when they
share a user-facing seed.
"""

import numpy as np

# Purpose tags. Never renumber: they are part of the reproducibility contract.
TAG_DIRECTIONS = 1  # synthetic signal directions
TAG_NOISE = 2  # per-example noise, addressed as (TAG_NOISE, example_index)
TAG_SHUFFLE = 3  # epoch shuffles, addressed as (TAG_SHUFFLE, epoch)
TAG_SUBSAMPLE = 4  # group-balanced subsampling


def substream(seed: int, *key: int) -> np.random.Generator:
    """Return the generator for substream `key` of `seed`.

    `seed` is a u64; key components are nonnegative integers.
    """
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    seq = np.random.SeedSequence(entropy=seed, spawn_key=tuple(key))
    return np.random.Generator(np.random.Philox(seq))
