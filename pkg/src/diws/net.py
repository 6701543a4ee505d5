"""Minimal dense network core: linear maps, ReLU, softmax cross-entropy.

Forward passes append entries to a :class:`ForwardTape`; each entry caches
the exact arrays it consumed, which gives (a) exact reverse-mode gradients
without an autodiff framework and (b) the per-layer input activations that
projection states later absorb. Shared layers are pure linear maps on
purpose: the projection theory governs ``W^T X`` exactly, so nonlinearities
live outside the shared parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import UsageError


@dataclass(frozen=True)
class LinearLayer:
    """A shared linear map identified by its store key."""

    param_id: str
    in_dim: int
    out_dim: int


@dataclass
class Batch:
    features: np.ndarray  # batch x d, float64
    labels: np.ndarray  # batch, integer class indices

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise UsageError(f"features must be 2-D, got shape {self.features.shape}")
        if self.labels.shape != (self.features.shape[0],):
            raise UsageError(
                f"got {self.labels.shape[0] if self.labels.ndim == 1 else '?'} labels "
                f"for {self.features.shape[0]} feature rows"
            )
        if self.labels.size and self.labels.min() < 0:
            raise UsageError("labels must be non-negative class indices")

    @property
    def size(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def take(self, indices) -> "Batch":
        idx = np.asarray(indices, dtype=np.int64)
        return Batch(self.features[idx], self.labels[idx])


@dataclass
class TapeEntry:
    kind: str  # "input" | "linear" | "relu" | "sum"
    out_slot: int
    in_slots: tuple[int, ...]
    output: np.ndarray
    param_id: str | None = None
    cached_input: np.ndarray | None = None
    cached_weight: np.ndarray | None = None


@dataclass
class ForwardTape:
    """Append-only record of one forward pass, in execution order."""

    entries: list[TapeEntry] = field(default_factory=list)

    def _slot(self) -> int:
        return len(self.entries)

    def value(self, slot: int) -> np.ndarray:
        return self.entries[slot].output

    @property
    def last_slot(self) -> int:
        if not self.entries:
            raise UsageError("tape is empty")
        return len(self.entries) - 1

    def add_input(self, x: np.ndarray) -> int:
        x = np.asarray(x, dtype=np.float64)
        slot = self._slot()
        self.entries.append(TapeEntry("input", slot, (), x))
        return slot

    def linear(self, param_id: str, in_slot: int, store) -> int:
        x = self.value(in_slot)
        w = store.weight(param_id)
        if x.shape[1] != w.shape[0]:
            raise UsageError(
                f"input width {x.shape[1]} does not match weight rows {w.shape[0]} "
                f"for parameter {param_id!r}"
            )
        slot = self._slot()
        self.entries.append(
            TapeEntry("linear", slot, (in_slot,), x @ w, param_id, x, w.copy())
        )
        return slot

    def relu(self, in_slot: int) -> int:
        x = self.value(in_slot)
        slot = self._slot()
        self.entries.append(TapeEntry("relu", slot, (in_slot,), np.maximum(x, 0.0), None, x))
        return slot

    def sum_nodes(self, in_slots: tuple[int, ...], shape: tuple[int, int]) -> int:
        if in_slots:
            total = self.value(in_slots[0]).copy()
            for s in in_slots[1:]:
                total += self.value(s)
        else:
            total = np.zeros(shape)
        slot = self._slot()
        self.entries.append(TapeEntry("sum", slot, tuple(in_slots), total))
        return slot

    def linear_inputs(self) -> list[tuple[str, np.ndarray]]:
        """(param_id, cached activation block) for every linear entry, in order."""
        return [(e.param_id, e.cached_input) for e in self.entries if e.kind == "linear"]

    def param_ids(self) -> list[str]:
        """Unique linear param ids in first-use order."""
        seen: dict[str, None] = {}
        for e in self.entries:
            if e.kind == "linear" and e.param_id not in seen:
                seen[e.param_id] = None
        return list(seen)

    def replay_outputs(self) -> bool:
        """True when recomputing every entry from its caches matches bit-exactly."""
        for e in self.entries:
            if e.kind == "linear":
                if not np.array_equal(e.cached_input @ e.cached_weight, e.output):
                    return False
            elif e.kind == "relu":
                if not np.array_equal(np.maximum(e.cached_input, 0.0), e.output):
                    return False
            elif e.kind == "sum":
                total = np.zeros_like(e.output)
                for s in e.in_slots:
                    total += self.value(s)
                if not np.array_equal(total, e.output):
                    return False
        return True


def forward_linear(layer: LinearLayer, x: np.ndarray, store, tape: ForwardTape) -> np.ndarray:
    """Apply a shared linear layer to a raw activation block, recording it as a leaf."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != layer.in_dim:
        raise UsageError(
            f"input shape {x.shape} does not match layer in_dim {layer.in_dim}"
        )
    in_slot = tape.add_input(x)
    out_slot = tape.linear(layer.param_id, in_slot, store)
    return tape.value(out_slot)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(np.asarray(x, dtype=np.float64), 0.0)


def relu_backward(grad_out: np.ndarray, cached_input: np.ndarray) -> np.ndarray:
    return np.asarray(grad_out) * (np.asarray(cached_input) > 0)


@dataclass(frozen=True)
class XentResult:
    loss: float
    grad_logits: np.ndarray


def softmax_xent(logits: np.ndarray, labels: np.ndarray) -> XentResult:
    """Mean cross-entropy over the batch; gradient is (softmax - onehot) / batch."""
    z = np.asarray(logits, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if z.ndim != 2:
        raise UsageError(f"logits must be 2-D, got shape {z.shape}")
    n, c = z.shape
    if y.shape != (n,):
        raise UsageError(f"got {y.size} labels for {n} logit rows")
    if y.size and (y.min() < 0 or y.max() >= c):
        raise UsageError(f"label out of range for {c} classes: {int(y.min())}..{int(y.max())}")
    shifted = z - z.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_norm
    loss = float(-log_probs[np.arange(n), y].mean())
    grad = np.exp(log_probs)
    grad[np.arange(n), y] -= 1.0
    grad /= n
    return XentResult(loss=loss, grad_logits=grad)


def accuracy(logits: np.ndarray, labels: np.ndarray) -> float:
    z = np.asarray(logits)
    y = np.asarray(labels)
    return float((z.argmax(axis=1) == y).mean())


def backward(tape: ForwardTape, grad_loss: np.ndarray, slot: int | None = None) -> dict[str, np.ndarray]:
    """Exact reverse-mode gradients for every parameter the tape touched.

    ``grad_loss`` is the loss gradient with respect to the output at ``slot``
    (the final entry by default). A parameter used at several tape positions
    accumulates the sum of its positional gradients.
    """
    if not tape.entries:
        raise UsageError("cannot run backward on an empty tape")
    if slot is None:
        slot = tape.last_slot
    grad_loss = np.asarray(grad_loss, dtype=np.float64)
    if grad_loss.shape != tape.value(slot).shape:
        raise UsageError(
            f"loss gradient shape {grad_loss.shape} does not match "
            f"output shape {tape.value(slot).shape}"
        )
    slot_grads: dict[int, np.ndarray] = {slot: grad_loss}
    param_grads: dict[str, np.ndarray] = {}
    for entry in reversed(tape.entries):
        g = slot_grads.pop(entry.out_slot, None)
        if g is None:
            continue
        if entry.kind == "linear":
            pg = entry.cached_input.T @ g
            if entry.param_id in param_grads:
                param_grads[entry.param_id] += pg
            else:
                param_grads[entry.param_id] = pg
            _add(slot_grads, entry.in_slots[0], g @ entry.cached_weight.T)
        elif entry.kind == "relu":
            _add(slot_grads, entry.in_slots[0], relu_backward(g, entry.cached_input))
        elif entry.kind == "sum":
            for s in entry.in_slots:
                _add(slot_grads, s, g)
        # "input" entries are leaves
    return param_grads


def _add(grads: dict[int, np.ndarray], slot: int, value: np.ndarray) -> None:
    if slot in grads:
        grads[slot] = grads[slot] + value
    else:
        grads[slot] = value
