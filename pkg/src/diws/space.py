"""Toy cell-based search space and the supernet's shared parameter store.

One cell: input node(s) holding the batch features, intermediate nodes
connected by every lower-to-higher edge, one operation choice per edge, node
values aggregated by sum, and a single classifier head fed by the last
intermediate node. The head is shared by every architecture, which is the
maximal-sharing case where disturbance between architectures is most
visible. Default dimensions give 6 edges x 4 ops = 4096 architectures,
small enough for exhaustive cross-checks.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, UsageError
from .net import Batch, ForwardTape, accuracy
from .projection import ProjectionState, init_projection
from .rng import Rng

OP_LINEAR = "linear_shared"
OP_RELU_LINEAR = "relu_linear_shared"
OP_IDENTITY = "identity"
OP_ZERO = "zero"
DEFAULT_OPS = (OP_LINEAR, OP_RELU_LINEAR, OP_IDENTITY, OP_ZERO)
PARAMETRIC_OPS = frozenset({OP_LINEAR, OP_RELU_LINEAR})

STORE_FORMAT = "di-ws/1"


@dataclass(frozen=True)
class CellSpec:
    """Structure of the cell: nodes, edges, per-edge operation menu."""

    feature_dim: int = 16
    num_classes: int = 4
    num_input_nodes: int = 1
    num_intermediate: int = 3
    ops_per_edge: tuple[str, ...] = DEFAULT_OPS
    head_key: str = "head"

    def __post_init__(self):
        object.__setattr__(self, "ops_per_edge", tuple(self.ops_per_edge))
        if self.feature_dim < 1 or self.num_input_nodes < 1 or self.num_intermediate < 1:
            raise UsageError("cell dimensions must all be >= 1")
        if self.num_classes < 2:
            raise UsageError("need at least 2 classes")
        if not self.ops_per_edge:
            raise UsageError("ops_per_edge must be non-empty")
        if len(set(self.ops_per_edge)) != len(self.ops_per_edge):
            raise UsageError("ops_per_edge must not contain duplicates")
        unknown = set(self.ops_per_edge) - set(DEFAULT_OPS)
        if unknown:
            raise UsageError(f"unknown operations: {sorted(unknown)}")

    @property
    def num_nodes(self) -> int:
        return self.num_input_nodes + self.num_intermediate

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        """All (lower, higher) node pairs, in lexicographic order."""
        pairs = []
        for u in range(self.num_nodes):
            for v in range(u + 1, self.num_nodes):
                if v >= self.num_input_nodes:  # edges into input nodes are meaningless
                    pairs.append((u, v))
        return tuple(pairs)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def num_ops(self) -> int:
        return len(self.ops_per_edge)

    def edge_key(self, edge_idx: int, op_idx: int) -> str:
        return f"e{edge_idx}:op{op_idx}"

    def parametric_keys(self) -> list[str]:
        """Store keys of every shared linear map, edges in index order."""
        keys = []
        for e in range(self.num_edges):
            for o, op in enumerate(self.ops_per_edge):
                if op in PARAMETRIC_OPS:
                    keys.append(self.edge_key(e, o))
        return keys


@dataclass(frozen=True)
class ArchEncoding:
    """One operation index per edge."""

    choices: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "choices", tuple(int(c) for c in self.choices))


def encode(arch: ArchEncoding) -> str:
    return ",".join(f"e{i}:op{c}" for i, c in enumerate(arch.choices))


_ARCH_PART = re.compile(r"^e(\d+):op(\d+)$")


def decode(text: str, spec: CellSpec) -> ArchEncoding:
    parts = text.split(",")
    if len(parts) != spec.num_edges:
        raise ParseError(
            f"expected {spec.num_edges} edge choices, got {len(parts)} in {text!r}"
        )
    choices = []
    for pos, part in enumerate(parts):
        m = _ARCH_PART.match(part)
        if not m:
            raise ParseError(f"malformed edge choice {part!r} at position {pos}")
        edge, op = int(m.group(1)), int(m.group(2))
        if edge != pos:
            raise ParseError(f"expected edge e{pos} at position {pos}, got e{edge}")
        if op >= spec.num_ops:
            raise ParseError(
                f"operation index {op} out of range for {spec.num_ops} ops at position {pos}"
            )
        choices.append(op)
    return ArchEncoding(tuple(choices))


def sample_uniform(spec: CellSpec, rng: Rng) -> ArchEncoding:
    return ArchEncoding(tuple(rng.randint(spec.num_ops) for _ in range(spec.num_edges)))


def all_archs(spec: CellSpec):
    """Every architecture in the space, lexicographic order (use on toy sizes only)."""
    def rec(prefix):
        if len(prefix) == spec.num_edges:
            yield ArchEncoding(tuple(prefix))
            return
        for o in range(spec.num_ops):
            yield from rec(prefix + [o])

    yield from rec([])


@dataclass
class LayerEntry:
    weight: np.ndarray
    projection: ProjectionState


class SharedParamStore:
    """Supernet parameters: one weight + projection per shared linear map."""

    def __init__(self, entries: dict[str, LayerEntry]):
        self.entries = entries

    @classmethod
    def build(cls, spec: CellSpec, lam: float, rng: Rng) -> "SharedParamStore":
        """Fresh store; weights drawn uniform in +/- sqrt(6/(fan_in+fan_out)),
        edges in index order then the head, so initialization is reproducible."""
        d = spec.feature_dim
        entries: dict[str, LayerEntry] = {}
        for key in spec.parametric_keys():
            bound = np.sqrt(6.0 / (d + d))
            entries[key] = LayerEntry(
                weight=rng.uniform_matrix(d, d, -bound, bound),
                projection=init_projection(d, lam),
            )
        entries[spec.head_key] = cls._head_entry(spec, lam, rng)
        return cls(entries)

    @staticmethod
    def _head_entry(spec: CellSpec, lam: float, rng: Rng) -> LayerEntry:
        d, c = spec.feature_dim, spec.num_classes
        bound = np.sqrt(6.0 / (d + c))
        return LayerEntry(
            weight=rng.uniform_matrix(d, c, -bound, bound),
            projection=init_projection(d, lam),
        )

    def ensure_head(self, spec: CellSpec, lam: float, rng: Rng) -> None:
        """Add ``spec.head_key`` if missing (multi-head test rigs)."""
        if spec.head_key not in self.entries:
            self.entries[spec.head_key] = self._head_entry(spec, lam, rng)

    def weight(self, key: str) -> np.ndarray:
        entry = self.entries.get(key)
        if entry is None:
            raise UsageError(f"unknown parameter id {key!r}")
        return entry.weight

    def set_weight(self, key: str, w: np.ndarray) -> None:
        entry = self.entries.get(key)
        if entry is None:
            raise UsageError(f"unknown parameter id {key!r}")
        entry.weight = np.asarray(w, dtype=np.float64)

    def projection(self, key: str) -> ProjectionState:
        entry = self.entries.get(key)
        if entry is None:
            raise UsageError(f"unknown parameter id {key!r}")
        return entry.projection

    def keys(self) -> list[str]:
        return sorted(self.entries)

    def snapshot(self) -> "SharedParamStore":
        return SharedParamStore(
            {k: LayerEntry(e.weight.copy(), e.projection.copy()) for k, e in self.entries.items()}
        )

    def reset_projections(self) -> None:
        for entry in self.entries.values():
            entry.projection.reset()

    def to_doc(self) -> dict:
        return {
            "format": STORE_FORMAT,
            "entries": {
                key: {
                    "weight": entry.weight.tolist(),
                    "projection": {
                        "p": entry.projection.p.tolist(),
                        "lambda": entry.projection.lam,
                        "absorbed_count": entry.projection.absorbed_count,
                    },
                }
                for key, entry in sorted(self.entries.items())
            },
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "SharedParamStore":
        if doc.get("format") != STORE_FORMAT:
            raise ParseError(f"unsupported store format {doc.get('format')!r}")
        entries = {}
        for key, payload in doc["entries"].items():
            proj = payload["projection"]
            entries[key] = LayerEntry(
                weight=np.asarray(payload["weight"], dtype=np.float64),
                projection=ProjectionState(
                    p=np.asarray(proj["p"], dtype=np.float64),
                    lam=float(proj["lambda"]),
                    absorbed_count=int(proj["absorbed_count"]),
                ),
            )
        return cls(entries)


@dataclass
class ForwardResult:
    logits: np.ndarray
    tape: ForwardTape = field(repr=False)


def _validate_arch(spec: CellSpec, arch: ArchEncoding) -> None:
    if len(arch.choices) != spec.num_edges:
        raise UsageError(
            f"architecture has {len(arch.choices)} choices for {spec.num_edges} edges"
        )
    for c in arch.choices:
        if not 0 <= c < spec.num_ops:
            raise UsageError(f"operation index {c} out of range for {spec.num_ops} ops")


def subnet_forward(
    spec: CellSpec, arch: ArchEncoding, batch: Batch, store: SharedParamStore
) -> ForwardResult:
    """Run the subnet selected by ``arch`` on a batch, recording a full tape."""
    _validate_arch(spec, arch)
    if batch.dim != spec.feature_dim:
        raise UsageError(
            f"batch feature dimension {batch.dim} does not match cell width {spec.feature_dim}"
        )
    tape = ForwardTape()
    input_slot = tape.add_input(batch.features)
    node_slots = [input_slot] * spec.num_input_nodes
    shape = (batch.size, spec.feature_dim)
    for v in range(spec.num_input_nodes, spec.num_nodes):
        contrib: list[int] = []
        for e, (src, dst) in enumerate(spec.edges):
            if dst != v:
                continue
            op = spec.ops_per_edge[arch.choices[e]]
            if op == OP_ZERO:
                continue
            if op == OP_IDENTITY:
                contrib.append(node_slots[src])
            elif op == OP_LINEAR:
                contrib.append(tape.linear(spec.edge_key(e, arch.choices[e]), node_slots[src], store))
            else:  # relu then shared linear
                r = tape.relu(node_slots[src])
                contrib.append(tape.linear(spec.edge_key(e, arch.choices[e]), r, store))
        node_slots.append(tape.sum_nodes(tuple(contrib), shape))
    logits_slot = tape.linear(spec.head_key, node_slots[-1], store)
    return ForwardResult(logits=tape.value(logits_slot), tape=tape)


def shared_params_of(spec: CellSpec, arch: ArchEncoding) -> frozenset[str]:
    """Store keys the architecture touches: chosen linear edges plus the head."""
    _validate_arch(spec, arch)
    keys = {
        spec.edge_key(e, c)
        for e, c in enumerate(arch.choices)
        if spec.ops_per_edge[c] in PARAMETRIC_OPS
    }
    keys.add(spec.head_key)
    return frozenset(keys)


def evaluate_arch(
    spec: CellSpec, arch: ArchEncoding, batch: Batch, store: SharedParamStore
) -> float:
    """Classification accuracy of the subnet on the batch."""
    result = subnet_forward(spec, arch, batch, store)
    return accuracy(result.logits, batch.labels)
