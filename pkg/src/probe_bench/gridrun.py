"""Hyperparameter grid execution across seeds, for ERM and the
group-balanced subsampling (subg) baseline.

Runs are embarrassingly parallel: each owns its model, the dataset is shared
read-only, and results are reduced in a fixed order (lr-major cells, then wd,
seeds ascending), so the report is byte-identical for any worker count.
Group labels are never consumed by training itself; the subg baseline uses
them only to rebalance the training view, and evaluation views are untouched.
"""

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from . import metrics, probe, rng
from .embstore import (
    SPLIT_TEST,
    SPLIT_TRAIN,
    SPLIT_VAL,
    EmbeddingDataset,
    SplitView,
    split_view,
    to_bytes,
)

DEFAULT_LRS = (0.01, 0.001, 0.0001)
DEFAULT_WDS = (1e-4, 1e-5, 1e-6)
DEFAULT_SEEDS = (0, 100, 200)

METHODS = ("erm", "subg")


class GridRunError(RuntimeError):
    """A training run failed; message carries cell and seed context."""


@dataclass(frozen=True)
class GridSpec:
    """The searched grid: learning rates x weight decays, repeated per seed."""

    lrs: tuple = DEFAULT_LRS
    wds: tuple = DEFAULT_WDS
    seeds: tuple = DEFAULT_SEEDS
    epochs: int = 20
    batch_size: int = 32
    method: str = "erm"

    def __post_init__(self):
        if not self.lrs or any(not lr > 0 for lr in self.lrs):
            raise ValueError(f"lrs must be a nonempty list of positive reals, got {self.lrs!r}")
        if not self.wds or any(wd < 0 for wd in self.wds):
            raise ValueError(f"wds must be a nonempty list of nonnegative reals, got {self.wds!r}")
        if not self.seeds or any(not (isinstance(s, int) and 0 <= s < 2**64) for s in self.seeds):
            raise ValueError(f"seeds must be a nonempty list of u64, got {self.seeds!r}")
        if not (isinstance(self.epochs, int) and self.epochs >= 1):
            raise ValueError(f"epochs must be an integer >= 1, got {self.epochs!r}")
        if not (isinstance(self.batch_size, int) and self.batch_size >= 1):
            raise ValueError(f"batch_size must be an integer >= 1, got {self.batch_size!r}")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        object.__setattr__(self, "lrs", tuple(float(lr) for lr in self.lrs))
        object.__setattr__(self, "wds", tuple(float(wd) for wd in self.wds))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))

    @classmethod
    def from_json(cls, text: str, method: str | None = None) -> "GridSpec":
        raw = json.loads(text)
        if not isinstance(raw, dict):
            raise ValueError("grid config must be a JSON object")
        known = {"lrs", "wds", "seeds", "epochs", "batch_size", "method"}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown grid config field(s): {sorted(unknown)}")
        for key in ("lrs", "wds", "seeds"):
            if key in raw:
                raw[key] = tuple(raw[key])
        if method is not None:
            raw["method"] = method
        return cls(**raw)


@dataclass(frozen=True)
class GridCell:
    cell_id: int
    lr: float
    wd: float


@dataclass(frozen=True)
class SeedRun:
    seed: int
    val: metrics.RunMetrics
    test: metrics.RunMetrics | None  # None when the dataset has no test split


@dataclass(frozen=True)
class CellResult:
    cell: GridCell
    runs: tuple
    val_agg: metrics.AggregateMetrics
    test_agg: metrics.AggregateMetrics | None


@dataclass(frozen=True)
class GridReport:
    method: str
    grid: GridSpec
    dataset_sha256: str
    cells: tuple = field(repr=False, default=())
    selected: GridCell | None = None

    def cell_results(self) -> tuple:
        return self.cells

    def selected_result(self) -> CellResult:
        return self.cells[self.selected.cell_id]

    def to_json_dict(self) -> dict:
        return {
            "method": self.method,
            "dataset_sha256": self.dataset_sha256,
            "grid": {
                "lrs": list(self.grid.lrs),
                "wds": list(self.grid.wds),
                "seeds": list(self.grid.seeds),
                "epochs": self.grid.epochs,
                "batch_size": self.grid.batch_size,
            },
            "cells": [
                {
                    "id": c.cell.cell_id,
                    "lr": c.cell.lr,
                    "wd": c.cell.wd,
                    "runs": [
                        {
                            "seed": r.seed,
                            "val": r.val.to_json_dict(),
                            "test": None if r.test is None else r.test.to_json_dict(),
                        }
                        for r in c.runs
                    ],
                    "val_agg": c.val_agg.to_json_dict(),
                    "test_agg": None if c.test_agg is None else c.test_agg.to_json_dict(),
                }
                for c in self.cells
            ],
            "selected": {
                "id": self.selected.cell_id,
                "lr": self.selected.lr,
                "wd": self.selected.wd,
            },
        }

    def to_canonical_json(self) -> str:
        """Sorted keys, compact separators, metrics rounded to 6 digits:
        byte-equality between reports is meaningful."""
        return json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":")) + "\n"

    @classmethod
    def from_json_dict(cls, raw: dict) -> "GridReport":
        grid = GridSpec(
            lrs=tuple(raw["grid"]["lrs"]),
            wds=tuple(raw["grid"]["wds"]),
            seeds=tuple(raw["grid"]["seeds"]),
            epochs=raw["grid"]["epochs"],
            batch_size=raw["grid"]["batch_size"],
            method=raw["method"],
        )
        cells = []
        for c in raw["cells"]:
            runs = tuple(
                SeedRun(
                    seed=r["seed"],
                    val=_run_metrics_from_json(r["val"]),
                    test=None if r["test"] is None else _run_metrics_from_json(r["test"]),
                )
                for r in c["runs"]
            )
            cells.append(
                CellResult(
                    cell=GridCell(c["id"], c["lr"], c["wd"]),
                    runs=runs,
                    val_agg=_agg_from_json(c["val_agg"]),
                    test_agg=None if c["test_agg"] is None else _agg_from_json(c["test_agg"]),
                )
            )
        sel = raw["selected"]
        return cls(
            method=raw["method"],
            grid=grid,
            dataset_sha256=raw["dataset_sha256"],
            cells=tuple(cells),
            selected=GridCell(sel["id"], sel["lr"], sel["wd"]),
        )


def _run_metrics_from_json(raw: dict) -> metrics.RunMetrics:
    return metrics.RunMetrics(
        per_group_acc=tuple(raw["per_group_acc"]),
        per_group_counts=tuple(raw["per_group_counts"]),
        wga=raw["wga"],
        oa=raw["oa"],
    )


def _agg_from_json(raw: dict) -> metrics.AggregateMetrics:
    return metrics.AggregateMetrics(
        mean_wga=raw["mean_wga"],
        std_wga=raw["std_wga"],
        mean_oa=raw["mean_oa"],
        std_oa=raw["std_oa"],
        repeat_count=raw["repeat_count"],
    )


def dataset_fingerprint(dataset: EmbeddingDataset) -> str:
    """sha256 of the dataset's canonical EMBS serialization."""
    return hashlib.sha256(to_bytes(dataset)).hexdigest()


def subsample_balanced(train_view: SplitView, seed: int) -> SplitView:
    """Equalize group sizes by seeded sampling without replacement.

    Every nonempty group keeps exactly m examples, m = smallest nonempty
    group. Selection is deterministic in `seed` and independent of example
    order within the view (groups are sampled by ascending group id).
    """
    if len(train_view) == 0:
        raise ValueError("cannot subsample an empty training view")
    groups = train_view.groups.astype(np.int64)
    counts = np.bincount(groups, minlength=train_view.dataset.group_count)
    m = int(counts[counts > 0].min())
    gen = rng.substream(seed, rng.TAG_SUBSAMPLE)
    keep = []
    for g in range(train_view.dataset.group_count):
        members = train_view.indices[groups == g]
        if members.size == 0:
            continue
        keep.append(gen.choice(members, size=m, replace=False))
    chosen = np.sort(np.concatenate(keep))
    return SplitView(train_view.dataset, train_view.split_id, chosen)


def default_workers() -> int:
    env = os.environ.get("PROBE_BENCH_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_grid(dataset: EmbeddingDataset, grid: GridSpec, workers: int | None = None) -> GridReport:
    """Train every (lr, wd) cell for every seed; aggregate; select by
    validation WGA. Output is independent of the worker count."""
    train_v = split_view(dataset, SPLIT_TRAIN)
    val_v = split_view(dataset, SPLIT_VAL)
    test_v = split_view(dataset, SPLIT_TEST)
    if len(train_v) == 0:
        raise ValueError("dataset has an empty train split")
    if len(val_v) == 0:
        raise ValueError("dataset has an empty validation split")

    cell_params = list(product(grid.lrs, grid.wds))  # lr-major order
    seeds = sorted(grid.seeds)
    tasks = [
        (ci, lr, wd, seed)
        for ci, (lr, wd) in enumerate(cell_params)
        for seed in seeds
    ]

    def one_run(task):
        ci, lr, wd, seed = task
        try:
            fit_view = train_v
            if grid.method == "subg":
                fit_view = subsample_balanced(train_v, seed)
            config = probe.TrainConfig(
                lr=lr, wd=wd, epochs=grid.epochs, batch_size=grid.batch_size, seed=seed
            )
            model = probe.train(fit_view, config)
            val_m = metrics.group_metrics(
                probe.predict(model, val_v), val_v.labels, val_v.groups, dataset.group_count
            )
            test_m = None
            if len(test_v) > 0:
                test_m = metrics.group_metrics(
                    probe.predict(model, test_v), test_v.labels, test_v.groups, dataset.group_count
                )
            return SeedRun(seed=seed, val=val_m, test=test_m)
        except Exception as e:
            raise GridRunError(f"cell {ci} (lr={lr:g}, wd={wd:g}), seed {seed}: {e}") from e

    if workers is None:
        workers = default_workers()
    if workers <= 1:
        results = [one_run(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one_run, tasks))

    cells = []
    per_cell = len(seeds)
    for ci, (lr, wd) in enumerate(cell_params):
        runs = tuple(results[ci * per_cell : (ci + 1) * per_cell])
        val_agg = metrics.aggregate([r.val for r in runs])
        test_runs = [r.test for r in runs if r.test is not None]
        test_agg = metrics.aggregate(test_runs) if test_runs else None
        cells.append(
            CellResult(cell=GridCell(ci, lr, wd), runs=runs, val_agg=val_agg, test_agg=test_agg)
        )

    selected = metrics.select_best([(c.cell, c.val_agg) for c in cells])
    return GridReport(
        method=grid.method,
        grid=grid,
        dataset_sha256=dataset_fingerprint(dataset),
        cells=tuple(cells),
        selected=selected,
    )
