"""probe-bench: worst-group-accuracy benchmarking of linear probes on frozen
embeddings, with a synthetic grouped-Gaussian generator whose analytic oracle
makes the spurious-correlation gap checkable at desk scale."""

__version__ = "0.1.0"

from .embstore import EmbeddingDataset, SplitView, read_embs, split_view, write_embs
from .gridrun import GridReport, GridSpec, run_grid, subsample_balanced
from .metrics import AggregateMetrics, RunMetrics, aggregate, group_metrics, select_best
from .probe import LinearModel, TrainConfig, init_model, loss_and_grad, predict, train
from .synthgen import SynthSpec, core_oracle_accuracy, generate

__all__ = [
    "EmbeddingDataset",
    "SplitView",
    "read_embs",
    "split_view",
    "write_embs",
    "GridReport",
    "GridSpec",
    "run_grid",
    "subsample_balanced",
    "AggregateMetrics",
    "RunMetrics",
    "aggregate",
    "group_metrics",
    "select_best",
    "LinearModel",
    "TrainConfig",
    "init_model",
    "loss_and_grad",
    "predict",
    "train",
    "SynthSpec",
    "core_oracle_accuracy",
    "generate",
]
