"""Experiment configuration: a strict JSON document shared by CLI and service.

Unknown keys are rejected everywhere, and the whole document validates before
any computation starts. The resolved document is embedded verbatim in every
result file, so re-running an emitted config reproduces the run exactly.
"""

from __future__ import annotations

import json
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .data import SyntheticSpec
from .errors import ConfigError
from .metrics import ScratchConfig
from .space import DEFAULT_OPS, CellSpec
from .training import TrainConfig


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True, validate_assignment=True)


class SyntheticModel(StrictModel):
    num_classes: int = 4
    dim: int = 16
    samples_per_class: int = 120
    cluster_spread: float = 1.0
    seed: int = 0

    def to_spec(self) -> SyntheticSpec:
        return SyntheticSpec(
            num_classes=self.num_classes,
            dim=self.dim,
            samples_per_class=self.samples_per_class,
            cluster_spread=self.cluster_spread,
            seed=self.seed,
        )


class DatasetModel(StrictModel):
    synthetic: Optional[SyntheticModel] = None
    csv_path: Optional[str] = None

    def resolved_synthetic(self) -> Optional[SyntheticModel]:
        if self.synthetic is not None and self.csv_path is not None:
            raise ConfigError("dataset: choose either 'synthetic' or 'csv_path', not both")
        if self.csv_path is not None:
            return None
        return self.synthetic if self.synthetic is not None else SyntheticModel()


class SearchSpaceModel(StrictModel):
    feature_dim: int = 16
    num_classes: int = 4
    num_input_nodes: int = 1
    num_intermediate: int = 3
    ops: list[str] = Field(default_factory=lambda: list(DEFAULT_OPS))

    def to_spec(self) -> CellSpec:
        return CellSpec(
            feature_dim=self.feature_dim,
            num_classes=self.num_classes,
            num_input_nodes=self.num_input_nodes,
            num_intermediate=self.num_intermediate,
            ops_per_edge=tuple(self.ops),
        )


class TrainModel(StrictModel):
    mode: Literal["di", "standard"] = "di"
    lam: float = Field(default=1.0, alias="lambda")
    eta_w: float = 0.1
    eta_theta: float = 0.05
    t_n: int = 50
    t_c: int = 20
    epochs: int = 80
    controller_start_epoch: int = 30
    batch_size: int = 32
    absorb_cap: int = 8
    seed: int = 0
    split_fraction: float = 0.4
    entropy_weight: float = 0.005
    use_baseline: bool = True
    baseline_decay: float = 0.9
    projection_reset_epoch: Optional[int] = None

    def to_config(self, **overrides) -> TrainConfig:
        cfg = TrainConfig(
            mode=self.mode,
            lam=self.lam,
            eta_w=self.eta_w,
            eta_theta=self.eta_theta,
            t_n=self.t_n,
            t_c=self.t_c,
            epochs=self.epochs,
            controller_start_epoch=self.controller_start_epoch,
            batch_size=self.batch_size,
            absorb_cap=self.absorb_cap,
            seed=self.seed,
            split_fraction=self.split_fraction,
            entropy_weight=self.entropy_weight,
            use_baseline=self.use_baseline,
            baseline_decay=self.baseline_decay,
            projection_reset_epoch=self.projection_reset_epoch,
        )
        for key, value in overrides.items():
            setattr(cfg, key, value)
        return cfg


class MetricsModel(StrictModel):
    pd_num_archs: int = 10
    pd_steps_per_arch: int = 50
    interval: int = 13
    tracked_archs: int = 64
    ktau_epochs: int = 20
    gt_num_archs: int = 16
    gt_epochs: int = 15
    scratch_steps: int = 150
    scratch_eta: float = 0.1
    gamma: float = 0.5

    def to_scratch_config(self, seed: int, batch_size: int) -> ScratchConfig:
        return ScratchConfig(
            steps=self.scratch_steps,
            eta=self.scratch_eta,
            batch_size=batch_size,
            seed=seed,
        )


class ExperimentConfig(StrictModel):
    dataset: DatasetModel = Field(default_factory=DatasetModel)
    search_space: SearchSpaceModel = Field(default_factory=SearchSpaceModel)
    train: TrainModel = Field(default_factory=TrainModel)
    metrics: MetricsModel = Field(default_factory=MetricsModel)

    def doc(self) -> dict:
        return self.model_dump(by_alias=True)


def parse_config_doc(doc: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(doc)
    except ValidationError as exc:
        raise ConfigError(f"invalid configuration: {exc}") from None


def load_config_file(path: str) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path!r} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"config file {path!r} must contain a JSON object")
    return parse_config_doc(doc)
