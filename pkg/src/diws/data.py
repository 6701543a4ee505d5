"""Synthetic dataset generation and CSV load/export.

The synthetic task is Gaussian clusters with deterministic mean placement:
class c gets mean ``MEAN_SCALE * e_c`` (the c-th standard basis vector), so
inter-mean distances are ``MEAN_SCALE * sqrt(2)`` and the classes are
linearly separable whenever the cluster spread stays below a quarter of
that. Samples are drawn class-by-class, row-major, from the package PRNG,
so a (spec, seed) pair reproduces the exact same file on any platform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ParseError
from .net import Batch
from .rng import Rng

MEAN_SCALE = 4.0


@dataclass(frozen=True)
class SyntheticSpec:
    num_classes: int = 4
    dim: int = 16
    samples_per_class: int = 120
    cluster_spread: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.num_classes < 2:
            raise ConfigError(f"need at least 2 classes, got {self.num_classes}")
        if self.dim < self.num_classes:
            raise ConfigError(
                f"dim ({self.dim}) must be >= num_classes ({self.num_classes}) "
                "for the mean placement rule"
            )
        if self.samples_per_class < 1:
            raise ConfigError("samples_per_class must be >= 1")
        if self.cluster_spread < 0:
            raise ConfigError("cluster_spread must be >= 0")

    def to_doc(self) -> dict:
        return {
            "num_classes": self.num_classes,
            "dim": self.dim,
            "samples_per_class": self.samples_per_class,
            "cluster_spread": self.cluster_spread,
            "seed": self.seed,
        }


def class_mean(spec: SyntheticSpec, label: int) -> np.ndarray:
    mean = np.zeros(spec.dim)
    mean[label] = MEAN_SCALE
    return mean


def generate_synthetic(spec: SyntheticSpec) -> Batch:
    rng = Rng(spec.seed)
    rows = spec.num_classes * spec.samples_per_class
    features = np.empty((rows, spec.dim))
    labels = np.empty(rows, dtype=np.int64)
    r = 0
    for c in range(spec.num_classes):
        mean = class_mean(spec, c)
        for _ in range(spec.samples_per_class):
            noise = np.array([rng.normal() for _ in range(spec.dim)])
            features[r] = mean + spec.cluster_spread * noise
            labels[r] = c
            r += 1
    return Batch(features, labels)


def export_csv(batch: Batch) -> str:
    """Header plus one "label,f1,..." row per sample; floats use shortest
    round-trip formatting so a load reproduces identical 64-bit values."""
    dim = batch.dim
    lines = ["label," + ",".join(f"f{i + 1}" for i in range(dim))]
    for row, label in zip(batch.features, batch.labels):
        lines.append(str(int(label)) + "," + ",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def _is_numeric(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False


def load_csv_text(text: str) -> Batch:
    lines = [ln for ln in text.splitlines()]
    rows: list[list[float]] = []
    labels: list[int] = []
    dim: int | None = None
    start = 0
    # a single header line is detected by a non-numeric first field
    if lines:
        first_fields = lines[0].split(",")
        if first_fields and first_fields[0].strip() and not _is_numeric(first_fields[0]):
            start = 1
    for idx in range(start, len(lines)):
        line = lines[idx].strip()
        lineno = idx + 1
        if not line:
            continue
        fields = line.split(",")
        if len(fields) < 2:
            raise ParseError(f"line {lineno}: expected 'label,f1,...', got {line!r}")
        try:
            label = int(fields[0])
        except ValueError:
            raise ParseError(f"line {lineno}: label {fields[0]!r} is not an integer") from None
        if label < 0:
            raise ParseError(f"line {lineno}: label must be non-negative, got {label}")
        try:
            values = [float(f) for f in fields[1:]]
        except ValueError:
            raise ParseError(f"line {lineno}: non-numeric feature value") from None
        if dim is None:
            dim = len(values)
        elif len(values) != dim:
            raise ParseError(
                f"line {lineno}: row has {len(values)} features, expected {dim}"
            )
        labels.append(label)
        rows.append(values)
    if not rows:
        raise ParseError("no data rows found")
    return Batch(np.asarray(rows), np.asarray(labels))


def load_csv(path: str) -> Batch:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read dataset file {path!r}: {exc}") from None
    return load_csv_text(text)
