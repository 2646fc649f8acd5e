"""Softmax linear probe on frozen embeddings, trained with plain SGD.

Protocol choices that the rest of the benchmark relies on:

- optimizer is plain SGD: no momentum, no schedule, constant learning rate;
- weight decay is a coupled L2 gradient term on W only, never on the bias;
- parameters start at zero (the objective is convex, so the seed influences
  nothing but shuffle order);
- every epoch reshuffles with a substream keyed on (seed, epoch), minibatches
  include the final partial batch with the loss averaged over its true size;
- all arithmetic is 64-bit even though embeddings are stored as 32-bit.

Training is bit-deterministic for a given kernel backend: same inputs and
config give the same parameters.
"""

import struct
from dataclasses import dataclass

import numpy as np

from . import kernels, rng
from .embstore import SplitView

NORMALIZE_MODES = ("none", "l2_per_vector")

MODEL_MAGIC = b"LINM"
MODEL_VERSION = 1
MODEL_HEADER = struct.Struct("<4sIII")


class TrainingDiverged(RuntimeError):
    """Parameters became non-finite during training."""

    def __init__(self, epoch: int, batch: int):
        super().__init__(f"non-finite parameters at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch


@dataclass(frozen=True)
class TrainConfig:
    """One cell of the hyperparameter grid, plus a shuffle seed."""

    lr: float
    wd: float = 0.0
    epochs: int = 20
    batch_size: int = 32
    seed: int = 0
    normalize: str = "none"

    def __post_init__(self):
        if not self.lr > 0:
            raise ValueError(f"lr must be positive, got {self.lr}")
        if not self.wd >= 0:
            raise ValueError(f"wd must be nonnegative, got {self.wd}")
        if not (isinstance(self.epochs, int) and self.epochs >= 1):
            raise ValueError(f"epochs must be an integer >= 1, got {self.epochs}")
        if not (isinstance(self.batch_size, int) and self.batch_size >= 1):
            raise ValueError(f"batch_size must be an integer >= 1, got {self.batch_size}")
        if not (isinstance(self.seed, int) and 0 <= self.seed < 2**64):
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.normalize not in NORMALIZE_MODES:
            raise ValueError(f"normalize must be one of {NORMALIZE_MODES}, got {self.normalize!r}")


@dataclass
class LinearModel:
    """Weights and bias of the softmax linear classifier (float64)."""

    W: np.ndarray  # class_count x dim
    b: np.ndarray  # class_count

    def __post_init__(self):
        self.W = np.ascontiguousarray(self.W, dtype=np.float64)
        self.b = np.ascontiguousarray(self.b, dtype=np.float64)
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[0],):
            raise ValueError(f"inconsistent shapes W{self.W.shape}, b{self.b.shape}")
        if not (np.isfinite(self.W).all() and np.isfinite(self.b).all()):
            raise ValueError("model parameters must be finite")

    @property
    def class_count(self) -> int:
        return self.W.shape[0]

    @property
    def dim(self) -> int:
        return self.W.shape[1]


def init_model(dim: int, class_count: int) -> LinearModel:
    """All-zeros model: uniform softmax, loss ln(class_count) everywhere."""
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    if class_count < 2:
        raise ValueError(f"class_count must be >= 2, got {class_count}")
    return LinearModel(np.zeros((class_count, dim)), np.zeros(class_count))


def normalize_features(X: np.ndarray, mode: str) -> np.ndarray:
    """Apply the trainer's normalization mode to feature rows (float64 out).

    l2_per_vector scales each row to unit norm; zero rows pass through
    unchanged (nothing sensible to scale them to).
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    if mode == "none":
        return X
    if mode == "l2_per_vector":
        norms = np.linalg.norm(X, axis=1, keepdims=True)
        return X / np.where(norms == 0.0, 1.0, norms)
    raise ValueError(f"normalize must be one of {NORMALIZE_MODES}, got {mode!r}")


def loss_and_grad(model: LinearModel, X: np.ndarray, y: np.ndarray, wd: float):
    """Mean softmax cross-entropy plus (wd/2)||W||^2, with its gradient.

    Returns (loss, gW, gb). Log-sum-exp uses max-subtraction; the decay term
    touches W only.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("batch must be a nonempty 2-D array")
    if y.shape != (X.shape[0],):
        raise ValueError("labels must match the batch length")
    if X.shape[1] != model.dim:
        raise ValueError(f"batch dim {X.shape[1]} != model dim {model.dim}")
    if not np.isfinite(X).all():
        raise ValueError("non-finite entries in batch")
    B = X.shape[0]
    logits = X @ model.W.T + model.b
    m = logits.max(axis=1, keepdims=True)
    lse = m + np.log(np.exp(logits - m).sum(axis=1, keepdims=True))
    ce = float((lse[:, 0] - logits[np.arange(B), y]).mean())
    loss = ce + 0.5 * wd * float((model.W * model.W).sum())
    P = np.exp(logits - lse)
    P[np.arange(B), y] -= 1.0
    gW = P.T @ X / B + wd * model.W
    gb = P.sum(axis=0) / B
    return loss, gW, gb


def _training_arrays(view: SplitView, normalize: str):
    X = normalize_features(view.embeddings, normalize)
    y = view.labels.astype(np.int32)
    return X, y


def train_with_losses(view: SplitView, config: TrainConfig):
    """Train on a split view; return (model, per-epoch mean training loss)."""
    if len(view) == 0:
        raise ValueError("training view is empty")
    X, y = _training_arrays(view, config.normalize)
    if np.unique(y).size < 2:
        raise ValueError("training view contains a single class; need at least two")
    n = X.shape[0]
    class_count = view.dataset.class_count

    # The shuffle decides batch membership only; within a batch, accumulation
    # order is canonical (ascending) so a full-batch step is seed-independent.
    perms = np.empty((config.epochs, n), dtype=np.int64)
    for epoch in range(config.epochs):
        p = rng.substream(config.seed, rng.TAG_SHUFFLE, epoch).permutation(n)
        for start in range(0, n, config.batch_size):
            p[start : start + config.batch_size].sort()
        perms[epoch] = p

    model = init_model(X.shape[1], class_count)
    losses = np.zeros(config.epochs, dtype=np.float64)
    kernel = kernels.get_backend()
    bad_epoch, bad_batch = kernel.run_sgd(
        X, y, model.W, model.b, config.lr, config.wd, config.batch_size, perms, losses
    )
    if bad_epoch >= 0:
        raise TrainingDiverged(bad_epoch, bad_batch)
    return model, losses


def train(view: SplitView, config: TrainConfig) -> LinearModel:
    """Train the probe per the fixed SGD protocol; last-epoch model wins."""
    model, _ = train_with_losses(view, config)
    return model


def predict(model: LinearModel, view_or_x, normalize: str = "none") -> np.ndarray:
    """Argmax of Wx + b per example; ties break toward the lowest class."""
    X = view_or_x.embeddings if isinstance(view_or_x, SplitView) else view_or_x
    X = normalize_features(X, normalize)
    if X.shape[1] != model.dim:
        raise ValueError(f"input dim {X.shape[1]} != model dim {model.dim}")
    scores = X @ model.W.T + model.b
    return np.argmax(scores, axis=1)


def write_model(model: LinearModel, sink) -> None:
    """Serialize as LINM v1: header, W row-major f64, then b f64."""
    sink.write(MODEL_HEADER.pack(MODEL_MAGIC, MODEL_VERSION, model.class_count, model.dim))
    sink.write(model.W.astype("<f8", copy=False).tobytes())
    sink.write(model.b.astype("<f8", copy=False).tobytes())


def read_model(source) -> LinearModel:
    header = source.read(MODEL_HEADER.size)
    if len(header) != MODEL_HEADER.size:
        raise ValueError(f"truncated model header: {len(header)} bytes")
    magic, version, class_count, dim = MODEL_HEADER.unpack(header)
    if magic != MODEL_MAGIC:
        raise ValueError(f"bad model magic {magic!r}")
    if version != MODEL_VERSION:
        raise ValueError(f"unsupported model version {version}")
    wb = source.read(8 * class_count * dim)
    bb = source.read(8 * class_count)
    if len(wb) != 8 * class_count * dim or len(bb) != 8 * class_count:
        raise ValueError("truncated model payload")
    W = np.frombuffer(wb, dtype="<f8").reshape(class_count, dim)
    b = np.frombuffer(bb, dtype="<f8")
    return LinearModel(W.copy(), b.copy())
