"""Synthetic grouped-Gaussian embedding datasets with an analytic oracle.

The generative model is a desk-scale stand-in for "embeddings of images whose
background correlates with the class": two fixed orthonormal directions carry
the class signal and the background signal, and each example is

    x = core_snr * s_y * e_core + spur_snr * s_b * e_spur + noise,

with s_y, s_b in {+1, -1} and isotropic unit-variance Gaussian noise. The
projection of x onto e_core is N(+-core_snr, 1), so the classifier
sign(x . e_core) has per-group accuracy Phi(core_snr) on every group mixture;
that closed form is the oracle the benchmark is checked against.

Group ids follow the convention group = 2*y + b. Default group counts mirror
the Waterbirds benchmark's train/val/test imbalance (95% of class-1 training
examples share background b=1).
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .embstore import EmbeddingDataset

# Count tuples are ordered (y=1,b=1), (y=1,b=0), (y=0,b=1), (y=0,b=0),
# i.e. group ids (3, 2, 1, 0).
GROUP_TUPLE_ORDER = (3, 2, 1, 0)
GROUP_TUPLE_LABELS = ("y1b1", "y1b0", "y0b1", "y0b0")

DEFAULT_TRAIN_COUNTS = (3498, 184, 56, 1057)
DEFAULT_VAL_COUNTS = (467, 467, 133, 133)
DEFAULT_TEST_COUNTS = (2255, 2255, 642, 642)

# Directions are redrawn while |cos| exceeds this, so Gram-Schmidt stays
# well-conditioned even in low dimensions.
COLLINEARITY_LIMIT = 0.99


class SpecError(ValueError):
    """Invalid SynthSpec field. `field` names the offender."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of the synthetic generator; one JSON-serializable object."""

    dim: int = 16
    core_snr: float = 1.0
    spur_snr: float = 3.0
    train_counts: tuple = DEFAULT_TRAIN_COUNTS
    val_counts: tuple = DEFAULT_VAL_COUNTS
    test_counts: tuple = DEFAULT_TEST_COUNTS
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.dim, int) or self.dim < 2:
            raise SpecError("dim", f"must be an integer >= 2, got {self.dim!r}")
        if not self.core_snr >= 0:
            raise SpecError("core_snr", f"must be nonnegative, got {self.core_snr!r}")
        if not self.spur_snr >= 0:
            raise SpecError("spur_snr", f"must be nonnegative, got {self.spur_snr!r}")
        for name in ("train_counts", "val_counts", "test_counts"):
            counts = getattr(self, name)
            if len(counts) != 4 or any((not isinstance(c, int)) or c < 0 for c in counts):
                raise SpecError(name, f"must be 4 nonnegative integers, got {counts!r}")
            object.__setattr__(self, name, tuple(counts))
        t = self.train_counts
        if t[0] + t[1] == 0 or t[2] + t[3] == 0:
            raise SpecError("train_counts", "each class needs at least one training example")
        if not (isinstance(self.seed, int) and 0 <= self.seed < 2**64):
            raise SpecError("seed", f"must be an unsigned 64-bit integer, got {self.seed!r}")

    @property
    def n(self) -> int:
        return sum(self.train_counts) + sum(self.val_counts) + sum(self.test_counts)

    def to_json(self) -> str:
        return json.dumps(
            {
                "dim": self.dim,
                "core_snr": self.core_snr,
                "spur_snr": self.spur_snr,
                "train_counts": list(self.train_counts),
                "val_counts": list(self.val_counts),
                "test_counts": list(self.test_counts),
                "seed": self.seed,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "SynthSpec":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as e:
            raise SpecError("json", f"not valid JSON: {e}") from e
        if not isinstance(raw, dict):
            raise SpecError("json", "top level must be an object")
        known = {"dim", "core_snr", "spur_snr", "train_counts", "val_counts", "test_counts", "seed"}
        unknown = set(raw) - known
        if unknown:
            raise SpecError(sorted(unknown)[0], "unknown field")
        kwargs = dict(raw)
        for name in ("train_counts", "val_counts", "test_counts"):
            if name in kwargs:
                v = kwargs[name]
                if not isinstance(v, list):
                    raise SpecError(name, f"must be a list of 4 integers, got {v!r}")
                kwargs[name] = tuple(v)
        for name in ("core_snr", "spur_snr"):
            if name in kwargs and isinstance(kwargs[name], int):
                kwargs[name] = float(kwargs[name])
        return cls(**kwargs)


def directions(spec: SynthSpec) -> tuple[np.ndarray, np.ndarray]:
    """The seeded orthonormal (e_core, e_spur) pair for this spec."""
    gen = rng.substream(spec.seed, rng.TAG_DIRECTIONS)
    u = gen.standard_normal(spec.dim)
    v = gen.standard_normal(spec.dim)
    norm_u = np.linalg.norm(u)
    while abs(float(u @ v)) > COLLINEARITY_LIMIT * norm_u * np.linalg.norm(v):
        v = gen.standard_normal(spec.dim)
    e_core = u / norm_u
    w = v - (v @ e_core) * e_core
    e_spur = w / np.linalg.norm(w)
    return e_core, e_spur


def generate(spec: SynthSpec) -> EmbeddingDataset:
    """Draw the dataset for `spec`, deterministically from its seed.

    Fill order is fixed: splits in order train, val, test; within a split,
    groups in count-tuple order (y1b1, y1b0, y0b1, y0b0). Example i draws its
    noise vector from noise substream i, so the output is independent of any
    internal batching.
    """
    e_core, e_spur = directions(spec)
    n = spec.n

    emb = np.empty((n, spec.dim), dtype=np.float64)
    labels = np.empty(n, dtype=np.uint32)
    groups = np.empty(n, dtype=np.uint32)
    splits = np.empty(n, dtype=np.uint8)

    i = 0
    for split_id, counts in enumerate((spec.train_counts, spec.val_counts, spec.test_counts)):
        for slot, count in enumerate(counts):
            y = 1 if slot < 2 else 0
            b = 1 if slot % 2 == 0 else 0
            s_y = 1.0 if y == 1 else -1.0
            s_b = 1.0 if b == 1 else -1.0
            mean = spec.core_snr * s_y * e_core + spec.spur_snr * s_b * e_spur
            for _ in range(count):
                noise = rng.substream(spec.seed, rng.TAG_NOISE, i).standard_normal(spec.dim)
                emb[i] = mean + noise
                labels[i] = y
                groups[i] = 2 * y + b
                splits[i] = split_id
                i += 1

    return EmbeddingDataset(
        embeddings=emb.astype(np.float32),
        labels=labels,
        groups=groups,
        splits=splits,
        class_count=2,
        group_count=4,
    )


def core_oracle_accuracy(spec: SynthSpec) -> float:
    """Per-group accuracy of sign(x . e_core) under the generative model.

    The projection onto e_core is N(+-core_snr, 1), so the accuracy is
    Phi(core_snr) on every group, hence also the classifier's WGA and OA on
    any group mixture.
    """
    return 0.5 * (1.0 + math.erf(spec.core_snr / math.sqrt(2.0)))
