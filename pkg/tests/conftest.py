import warnings

import numpy as np
import pytest

from probe_bench import synthgen
from probe_bench.embstore import EmbeddingDataset, IncompleteSplitWarning


@pytest.fixture(scope="session")
def default_ds():
    """Default-counts synthetic dataset (n=11788, dim=16)."""
    return synthgen.generate(synthgen.SynthSpec(seed=0))


@pytest.fixture(scope="session")
def small_balanced_ds():
    """Small balanced dataset for training tests."""
    spec = synthgen.SynthSpec(
        dim=8,
        core_snr=2.0,
        spur_snr=1.0,
        train_counts=(40, 40, 40, 40),
        val_counts=(15, 15, 15, 15),
        test_counts=(15, 15, 15, 15),
        seed=11,
    )
    return synthgen.generate(spec)


def random_dataset(gen: np.random.Generator, n=None, dim=None, class_count=None, group_count=None):
    """Arbitrary valid dataset for fuzz-style tests."""
    n = n or int(gen.integers(1, 65))
    dim = dim or int(gen.integers(1, 33))
    class_count = class_count or int(gen.integers(2, 5))
    group_count = group_count or int(gen.integers(1, 7))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IncompleteSplitWarning)
        return EmbeddingDataset(
            embeddings=gen.standard_normal((n, dim)).astype(np.float32),
            labels=gen.integers(0, class_count, size=n).astype(np.uint32),
            groups=gen.integers(0, group_count, size=n).astype(np.uint32),
            splits=gen.integers(0, 3, size=n).astype(np.uint8),
            class_count=class_count,
            group_count=group_count,
        )
