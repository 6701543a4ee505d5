"""One entry point per experiment, shared by the CLI and the HTTP service.

Handlers take a fully resolved :class:`ExperimentConfig` and return plain
JSON-ready documents. File writing stays in the CLI; HTTP responses return
the same documents, so both surfaces agree byte-for-byte after canonical
serialization.
"""

from __future__ import annotations

from .checks import run_check_suites
from .config import ExperimentConfig
from .data import export_csv, generate_synthetic, load_csv
from .errors import ConfigError
from .experiments import compare_pd, gt_tau_compare, ktau_series
from .metrics import DisturbanceBudget
from .net import Batch
from .training import run

DOC_FORMAT = "di-ws/1"


def load_dataset(cfg: ExperimentConfig) -> Batch:
    synthetic = cfg.dataset.resolved_synthetic()
    if synthetic is not None:
        data = generate_synthetic(synthetic.to_spec())
    else:
        data = load_csv(cfg.dataset.csv_path)
    if data.dim != cfg.search_space.feature_dim:
        raise ConfigError(
            f"dataset dimension {data.dim} does not match "
            f"search_space.feature_dim {cfg.search_space.feature_dim}"
        )
    if int(data.labels.max()) >= cfg.search_space.num_classes:
        raise ConfigError(
            f"dataset contains label {int(data.labels.max())} but "
            f"search_space.num_classes is {cfg.search_space.num_classes}"
        )
    return data


def handle_train(cfg: ExperimentConfig) -> dict:
    spec = cfg.search_space.to_spec()
    dataset = load_dataset(cfg)
    record = run(spec, cfg.train.to_config(), dataset, config_doc=cfg.doc())
    return record.to_doc()


def handle_compare_pd(cfg: ExperimentConfig) -> dict:
    spec = cfg.search_space.to_spec()
    dataset = load_dataset(cfg)
    outcome = compare_pd(
        spec,
        cfg.train.to_config(),
        dataset,
        num_archs=cfg.metrics.pd_num_archs,
        steps_per_arch=cfg.metrics.pd_steps_per_arch,
        budget=DisturbanceBudget(cfg.metrics.gamma),
    )
    return {
        "format": DOC_FORMAT,
        "config": cfg.doc(),
        "summary": outcome.summary,
        "matrix_di": outcome.result_di.matrix.to_doc(),
        "matrix_standard": outcome.result_standard.matrix.to_doc(),
    }


def handle_ktau(cfg: ExperimentConfig) -> dict:
    spec = cfg.search_space.to_spec()
    dataset = load_dataset(cfg)
    result = ktau_series(
        spec,
        cfg.train.to_config(),
        dataset,
        num_tracked=cfg.metrics.tracked_archs,
        interval=cfg.metrics.interval,
        epochs=cfg.metrics.ktau_epochs,
    )
    return {
        "format": DOC_FORMAT,
        "config": cfg.doc(),
        "mode": result.mode,
        "interval": result.interval,
        "rows": [[epoch, tau] for epoch, tau in result.rows],
        "mean_ktau": result.mean_tau,
    }


def handle_gt_tau(cfg: ExperimentConfig) -> dict:
    spec = cfg.search_space.to_spec()
    dataset = load_dataset(cfg)
    scratch_cfg = cfg.metrics.to_scratch_config(
        seed=cfg.train.seed, batch_size=cfg.train.batch_size
    )
    outcome = gt_tau_compare(
        spec,
        cfg.train.to_config(),
        dataset,
        num_archs=cfg.metrics.gt_num_archs,
        epochs=cfg.metrics.gt_epochs,
        scratch_cfg=scratch_cfg,
    )
    return {
        "format": DOC_FORMAT,
        "config": cfg.doc(),
        "archs": outcome.archs,
        "scratch": scratch_cfg.to_doc(),
        "modes": {
            "di": outcome.di.to_doc(),
            "standard": outcome.standard.to_doc(),
        },
    }


def handle_check(cfg: ExperimentConfig) -> dict:
    report = run_check_suites(cfg.train.seed)
    report["format"] = DOC_FORMAT
    return report


def handle_gen_data(cfg: ExperimentConfig) -> dict:
    synthetic = cfg.dataset.resolved_synthetic()
    if synthetic is None:
        raise ConfigError("gen-data requires a synthetic dataset spec, not a csv_path")
    batch = generate_synthetic(synthetic.to_spec())
    return {
        "format": DOC_FORMAT,
        "spec": synthetic.to_spec().to_doc(),
        "rows": batch.size,
        "csv": export_csv(batch),
    }
