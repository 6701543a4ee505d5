"""Request/response models for the HTTP service."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict

from ..config import ExperimentConfig
from ..errors import ConfigError


class ExperimentRequest(BaseModel):
    """Config plus the same overrides the CLI flags provide."""

    model_config = ConfigDict(extra="forbid")

    config: Optional[ExperimentConfig] = None
    seed: Optional[int] = None
    mode: Optional[Literal["di", "standard"]] = None
    seed_applies_to_dataset: bool = False  # gen-data seeds the synthetic spec instead

    def resolve(self) -> ExperimentConfig:
        cfg = self.config if self.config is not None else ExperimentConfig()
        cfg = ExperimentConfig.model_validate(cfg.model_dump(by_alias=True))  # deep copy
        if self.seed is not None:
            if self.seed_applies_to_dataset:
                synthetic = cfg.dataset.resolved_synthetic()
                if synthetic is None:
                    raise ConfigError("cannot apply a dataset seed to a csv dataset")
                synthetic.seed = self.seed
                cfg.dataset.synthetic = synthetic
                cfg.dataset.csv_path = None
            else:
                cfg.train.seed = self.seed
        if self.mode is not None:
            cfg.train.mode = self.mode
        return cfg


class HealthResponse(BaseModel):
    status: str
    format: str


class DocumentResponse(BaseModel):
    """A result document exactly as the CLI would serialize it."""

    document: dict
