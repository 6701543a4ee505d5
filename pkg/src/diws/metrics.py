"""Disturbance measurements.

The central object is the accuracy-change matrix: train n architectures
sequentially on one shared store and, after each one, re-evaluate every
architecture trained so far on the full validation set. Cell (i, j) is the
accuracy of architecture i right after architecture j finished training, so
row i traces how later training disturbs an earlier result. Cells below the
diagonal are never filled and stay null.

On top of that sit the scalar summaries: mean absolute accuracy change at a
given column interval, tie-corrected Kendall rank correlation, and the
ground-truth correlation against small from-scratch retrainings.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, UsageError
from .net import Batch
from .rng import Rng
from .space import (
    ArchEncoding,
    CellSpec,
    SharedParamStore,
    encode,
    evaluate_arch,
    shared_params_of,
    subnet_forward,
)
from .training import RngStreams, TrainConfig, draw_batch, split_dataset, train_arch_step


@dataclass
class PDMatrix:
    archs: list[str]
    cells: list[list[float | None]]

    @property
    def n(self) -> int:
        return len(self.archs)

    def to_doc(self) -> dict:
        return {"archs": self.archs, "cells": self.cells}

    @classmethod
    def from_doc(cls, doc: dict) -> "PDMatrix":
        return cls(archs=list(doc["archs"]), cells=[list(row) for row in doc["cells"]])


@dataclass(frozen=True)
class DisturbanceBudget:
    """Reporting threshold on output change; never enforced during training."""

    gamma: float

    def __post_init__(self):
        if self.gamma < 0:
            raise ConfigError(f"gamma must be >= 0, got {self.gamma}")


def exceedance_fraction(values: list[float], budget: DisturbanceBudget) -> float:
    if not values:
        return 0.0
    return float(np.mean([v > budget.gamma for v in values]))


def prediction_pd(
    spec: CellSpec,
    arch: ArchEncoding,
    batch: Batch,
    store_before: SharedParamStore,
    store_after: SharedParamStore,
) -> float:
    """Frobenius norm of the logit difference on a probe batch (pre-softmax)."""
    before = subnet_forward(spec, arch, batch, store_before).logits
    after = subnet_forward(spec, arch, batch, store_after).logits
    return float(np.linalg.norm(after - before, "fro"))


@dataclass
class PdExperimentResult:
    matrix: PDMatrix
    probe_pds: list[float] = field(default_factory=list)


def pd_matrix_experiment(
    spec: CellSpec,
    archs: list[ArchEncoding],
    cfg: TrainConfig,
    dataset: Batch,
    steps_per_arch: int = 50,
) -> PdExperimentResult:
    """Sequentially train the given architectures and record the accuracy-change matrix.

    Runs identically under di and standard modes (selected by ``cfg.mode``).
    Also probes the logit-space disturbance of every already-trained
    architecture across each training stage.
    """
    if len(archs) < 1:
        raise UsageError("need at least one architecture")
    cfg.validate()
    streams = RngStreams.for_seed(cfg.seed)
    train_data, val_data = split_dataset(dataset, cfg.split_fraction, streams.split)
    store = SharedParamStore.build(spec, cfg.lam, streams.init)
    probe = val_data.take(list(range(min(cfg.batch_size, val_data.size))))
    n = len(archs)
    cells: list[list[float | None]] = [[None] * n for _ in range(n)]
    probe_pds: list[float] = []
    for j, arch_j in enumerate(archs):
        stage_before = store.snapshot()
        for _ in range(steps_per_arch):
            batch = draw_batch(train_data, cfg.batch_size, streams.batch)
            train_arch_step(spec, store, arch_j, batch, cfg, streams.absorb)
        for i in range(j + 1):
            cells[i][j] = evaluate_arch(spec, archs[i], val_data, store)
        for i in range(j):  # logit shift of already-trained archs over this stage
            probe_pds.append(prediction_pd(spec, archs[i], probe, stage_before, store))
    return PdExperimentResult(
        matrix=PDMatrix(archs=[encode(a) for a in archs], cells=cells),
        probe_pds=probe_pds,
    )


def performance_change(matrix: PDMatrix, interval: int) -> float:
    """Mean |accuracy change| across all filled column pairs ``interval`` apart."""
    n = matrix.n
    if interval < 1 or interval >= n:
        raise UsageError(f"interval must lie in [1, {n - 1}], got {interval}")
    diffs = []
    for row in matrix.cells:
        for c in range(n - interval):
            a, b = row[c], row[c + interval]
            if a is not None and b is not None:
                diffs.append(abs(b - a))
    if not diffs:
        return 0.0
    return float(np.mean(diffs))


def kendall_tau(ranks_a, ranks_b) -> float:
    """Tie-corrected Kendall rank correlation (tau-b) by direct pair counting.

    Returns 0.0 when either input is entirely tied (the tie correction
    degenerates to 0/0).
    """
    a = np.asarray(ranks_a, dtype=np.float64)
    b = np.asarray(ranks_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise UsageError(f"inputs must be equal-length 1-D sequences, got {a.shape} and {b.shape}")
    n = a.shape[0]
    if n < 2:
        raise UsageError("need at least 2 observations")
    concordant = discordant = ties_a = ties_b = 0
    for i in range(n):
        for j in range(i + 1, n):
            da = a[i] - a[j]
            db = b[i] - b[j]
            if da == 0 and db == 0:
                ties_a += 1
                ties_b += 1
            elif da == 0:
                ties_a += 1
            elif db == 0:
                ties_b += 1
            elif (da > 0) == (db > 0):
                concordant += 1
            else:
                discordant += 1
    n0 = n * (n - 1) // 2
    denom = np.sqrt(float(n0 - ties_a)) * np.sqrt(float(n0 - ties_b))
    if denom == 0:
        return 0.0
    return float((concordant - discordant) / denom)


@dataclass
class ScratchConfig:
    """Budget for the small from-scratch retraining used as ground truth."""

    steps: int = 150
    eta: float = 0.1
    batch_size: int = 32
    seed: int = 0

    def validate(self) -> None:
        if self.steps < 1 or self.batch_size < 1 or not self.eta > 0:
            raise ConfigError("scratch training needs steps >= 1, batch_size >= 1, eta > 0")

    def to_doc(self) -> dict:
        return {
            "steps": self.steps,
            "eta": self.eta,
            "batch_size": self.batch_size,
            "seed": self.seed,
        }


def scratch_accuracies(
    spec: CellSpec,
    archs: list[ArchEncoding],
    train_data: Batch,
    val_data: Batch,
    scratch_cfg: ScratchConfig,
) -> list[float]:
    """Validation accuracy of each architecture trained standalone from scratch."""
    scratch_cfg.validate()
    accs = []
    step_cfg = TrainConfig(
        mode="standard",
        eta_w=scratch_cfg.eta,
        batch_size=scratch_cfg.batch_size,
        seed=scratch_cfg.seed,
    )
    for k, arch in enumerate(archs):
        master = Rng(scratch_cfg.seed).derive(100 + k)
        init_rng = master.derive(0)
        batch_rng = master.derive(1)
        store = SharedParamStore.build(spec, 1.0, init_rng)
        for _ in range(scratch_cfg.steps):
            batch = draw_batch(train_data, scratch_cfg.batch_size, batch_rng)
            train_arch_step(spec, store, arch, batch, step_cfg, batch_rng)
        accs.append(evaluate_arch(spec, arch, val_data, store))
    return accs


@dataclass
class GtTauResult:
    archs: list[str]
    ws_accs: list[float]
    scratch_accs: list[float]
    tau: float

    def to_doc(self) -> dict:
        return {
            "archs": self.archs,
            "ws_accs": self.ws_accs,
            "scratch_accs": self.scratch_accs,
            "tau": self.tau,
        }


def gt_tau(
    spec: CellSpec,
    archs: list[ArchEncoding],
    store: SharedParamStore,
    train_data: Batch,
    val_data: Batch,
    scratch_cfg: ScratchConfig,
    scratch_accs: list[float] | None = None,
) -> GtTauResult:
    """Correlation between weight-sharing accuracy estimates and from-scratch results.

    ``scratch_accs`` can be supplied to reuse one set of ground-truth
    retrainings across several supernets (they do not depend on the store).
    """
    if len(set(encode(a) for a in archs)) != len(archs):
        raise UsageError("architectures must be distinct")
    ws_accs = [evaluate_arch(spec, a, val_data, store) for a in archs]
    if scratch_accs is None:
        scratch_accs = scratch_accuracies(spec, archs, train_data, val_data, scratch_cfg)
    tau = kendall_tau(ws_accs, scratch_accs)
    return GtTauResult(
        archs=[encode(a) for a in archs],
        ws_accs=ws_accs,
        scratch_accs=list(scratch_accs),
        tau=tau,
    )
