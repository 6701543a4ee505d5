"""Paired di-vs-standard experiment drivers.

Each driver fixes everything except the update rule: architecture selection,
data split, weight initialization and batch order all derive from the same
seed in both modes, so any difference in the outcome is attributable to the
update strategy alone.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError
from .metrics import (
    DisturbanceBudget,
    GtTauResult,
    PdExperimentResult,
    ScratchConfig,
    exceedance_fraction,
    gt_tau,
    kendall_tau,
    pd_matrix_experiment,
    performance_change,
    scratch_accuracies,
)
from .net import Batch
from .policy import init_policy
from .rng import Rng
from .space import ArchEncoding, CellSpec, SharedParamStore, encode, sample_uniform
from .training import (
    MODE_DI,
    MODE_STANDARD,
    RngStreams,
    TrainConfig,
    split_dataset,
    supernet_phase,
)

# Stream tags for experiment-level architecture selection.
_STREAM_PD_ARCHS = 40
_STREAM_TRACKED = 50
_STREAM_PROBE = 60


def _uniform_archs(spec: CellSpec, seed: int, tag: int, count: int, distinct: bool) -> list[ArchEncoding]:
    rng = Rng(seed).derive(tag)
    archs: list[ArchEncoding] = []
    seen: set[str] = set()
    while len(archs) < count:
        arch = sample_uniform(spec, rng)
        if distinct:
            key = encode(arch)
            if key in seen:
                continue
            seen.add(key)
        archs.append(arch)
    return archs


@dataclass
class ComparePdOutcome:
    archs: list[str]
    result_di: PdExperimentResult
    result_standard: PdExperimentResult
    summary: dict


def compare_pd(
    spec: CellSpec,
    base_cfg: TrainConfig,
    dataset: Batch,
    num_archs: int = 10,
    steps_per_arch: int = 50,
    budget: DisturbanceBudget | None = None,
) -> ComparePdOutcome:
    """Sequential-training disturbance matrices under both update rules."""
    if num_archs < 2:
        raise ConfigError(f"need at least 2 architectures, got {num_archs}")
    archs = _uniform_archs(spec, base_cfg.seed, _STREAM_PD_ARCHS, num_archs, distinct=False)
    result_di = pd_matrix_experiment(
        spec, archs, replace(base_cfg, mode=MODE_DI), dataset, steps_per_arch
    )
    result_standard = pd_matrix_experiment(
        spec, archs, replace(base_cfg, mode=MODE_STANDARD), dataset, steps_per_arch
    )
    per_interval = {}
    for interval in range(1, num_archs):
        per_interval[str(interval)] = {
            "di": performance_change(result_di.matrix, interval),
            "standard": performance_change(result_standard.matrix, interval),
        }
    summary = {"num_archs": num_archs, "steps_per_arch": steps_per_arch, "per_interval": per_interval}
    if budget is not None:
        summary["probe"] = {
            "gamma": budget.gamma,
            "di": {
                "mean_prediction_pd": float(np.mean(result_di.probe_pds)) if result_di.probe_pds else 0.0,
                "exceedance_fraction": exceedance_fraction(result_di.probe_pds, budget),
            },
            "standard": {
                "mean_prediction_pd": float(np.mean(result_standard.probe_pds))
                if result_standard.probe_pds
                else 0.0,
                "exceedance_fraction": exceedance_fraction(result_standard.probe_pds, budget),
            },
        }
    return ComparePdOutcome(
        archs=[encode(a) for a in archs],
        result_di=result_di,
        result_standard=result_standard,
        summary=summary,
    )


@dataclass
class KtauSeriesResult:
    mode: str
    interval: int
    rows: list[tuple[int, float]]  # (epoch, tau between epoch-interval and epoch)
    mean_tau: float


def _train_supernet_uniform(
    spec: CellSpec, cfg: TrainConfig, dataset: Batch, epochs: int, per_epoch=None
) -> tuple[SharedParamStore, Batch, Batch]:
    """Supernet training with uniform architecture sampling (no controller),
    so di/standard runs stay exactly paired. Returns (store, train, val)."""
    cfg.validate()
    streams = RngStreams.for_seed(cfg.seed)
    train_data, val_data = split_dataset(dataset, cfg.split_fraction, streams.split)
    store = SharedParamStore.build(spec, cfg.lam, streams.init)
    policy = init_policy(spec)  # sampled from only when a controller runs; here never
    for _ in range(epochs):
        supernet_phase(spec, store, policy, train_data, cfg, streams, use_policy=False)
        if per_epoch is not None:
            per_epoch(store, val_data)
    return store, train_data, val_data


def ktau_series(
    spec: CellSpec,
    cfg: TrainConfig,
    dataset: Batch,
    num_tracked: int = 64,
    interval: int = 13,
    epochs: int = 20,
) -> KtauSeriesResult:
    """Rank stability of tracked architectures across training epochs.

    After every epoch the full-validation accuracy of each tracked
    architecture is recorded; the series value at epoch e is the Kendall tau
    between the accuracy vectors at epochs e-interval and e.
    """
    if interval < 1:
        raise ConfigError(f"interval must be >= 1, got {interval}")
    if epochs <= interval:
        raise ConfigError(
            f"need more epochs ({epochs}) than the interval ({interval}) for a non-empty series"
        )
    tracked = _uniform_archs(spec, cfg.seed, _STREAM_TRACKED, num_tracked, distinct=False)
    accs: list[list[float]] = []

    def record(store, val_data):
        from .space import evaluate_arch

        accs.append([evaluate_arch(spec, a, val_data, store) for a in tracked])

    _train_supernet_uniform(spec, cfg, dataset, epochs, per_epoch=record)
    rows = [(e, kendall_tau(accs[e - interval], accs[e])) for e in range(interval, epochs)]
    mean_tau = float(np.mean([tau for _, tau in rows]))
    return KtauSeriesResult(mode=cfg.mode, interval=interval, rows=rows, mean_tau=mean_tau)


@dataclass
class GtTauCompareOutcome:
    archs: list[str]
    di: GtTauResult
    standard: GtTauResult


def gt_tau_compare(
    spec: CellSpec,
    base_cfg: TrainConfig,
    dataset: Batch,
    num_archs: int = 16,
    epochs: int = 15,
    scratch_cfg: ScratchConfig | None = None,
) -> GtTauCompareOutcome:
    """Ground-truth rank correlation of both supernets against shared
    from-scratch retrainings of the same probe architectures."""
    if scratch_cfg is None:
        scratch_cfg = ScratchConfig(seed=base_cfg.seed)
    archs = _uniform_archs(spec, base_cfg.seed, _STREAM_PROBE, num_archs, distinct=True)
    store_di, train_data, val_data = _train_supernet_uniform(
        spec, replace(base_cfg, mode=MODE_DI), dataset, epochs
    )
    store_standard, _, _ = _train_supernet_uniform(
        spec, replace(base_cfg, mode=MODE_STANDARD), dataset, epochs
    )
    shared_scratch = scratch_accuracies(spec, archs, train_data, val_data, scratch_cfg)
    result_di = gt_tau(spec, archs, store_di, train_data, val_data, scratch_cfg, shared_scratch)
    result_standard = gt_tau(
        spec, archs, store_standard, train_data, val_data, scratch_cfg, shared_scratch
    )
    return GtTauCompareOutcome(
        archs=[encode(a) for a in archs], di=result_di, standard=result_standard
    )
