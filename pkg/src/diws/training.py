"""End-to-end training: alternating supernet and controller phases.

Each supernet iteration samples an architecture, takes one loss gradient on a
training batch, steps every shared layer of that architecture, and only then
folds the batch's recorded input features into the layers' projection states.
That ordering matters: the projection used by a step must reflect strictly
earlier batches, never the current one, otherwise the layer could not improve
on the architecture being trained.

``standard`` mode is the plain sequential weight-sharing baseline; it never
reads or writes projection state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, UsageError
from .net import Batch, accuracy, backward, softmax_xent
from .policy import PolicyParams, init_policy, policy_to_doc, reinforce_update, sample_arch
from .projection import absorb_batch, projected_step
from .rng import Rng
from .space import (
    ArchEncoding,
    CellSpec,
    SharedParamStore,
    encode,
    sample_uniform,
    subnet_forward,
)

MODE_DI = "di"
MODE_STANDARD = "standard"

RECORD_FORMAT = "di-ws/1"

# Fixed tags for deriving the independent RNG streams of a run.
_STREAM_SPLIT = 1
_STREAM_INIT = 2
_STREAM_ARCH = 3
_STREAM_BATCH = 4
_STREAM_ABSORB = 5


@dataclass
class TrainConfig:
    mode: str = MODE_DI
    lam: float = 1.0
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
    projection_reset_epoch: int | None = None

    def validate(self) -> None:
        if self.mode not in (MODE_DI, MODE_STANDARD):
            raise ConfigError(f"mode must be 'di' or 'standard', got {self.mode!r}")
        if not self.lam > 0:
            raise ConfigError(f"lambda must be > 0, got {self.lam}")
        if not self.eta_w > 0 or not self.eta_theta > 0:
            raise ConfigError("learning rates must be > 0")
        if min(self.t_n, self.t_c, self.epochs, self.controller_start_epoch) < 0:
            raise ConfigError("step and epoch counts must be >= 0")
        if self.controller_start_epoch > self.epochs:
            raise ConfigError(
                f"controller_start_epoch ({self.controller_start_epoch}) "
                f"must not exceed epochs ({self.epochs})"
            )
        if self.batch_size < 1 or self.absorb_cap < 1:
            raise ConfigError("batch_size and absorb_cap must be >= 1")
        if not 0.0 < self.split_fraction < 1.0:
            raise ConfigError(
                f"split_fraction must lie strictly between 0 and 1, got {self.split_fraction}"
            )

    def to_doc(self) -> dict:
        return {
            "mode": self.mode,
            "lambda": self.lam,
            "eta_w": self.eta_w,
            "eta_theta": self.eta_theta,
            "t_n": self.t_n,
            "t_c": self.t_c,
            "epochs": self.epochs,
            "controller_start_epoch": self.controller_start_epoch,
            "batch_size": self.batch_size,
            "absorb_cap": self.absorb_cap,
            "seed": self.seed,
            "split_fraction": self.split_fraction,
            "entropy_weight": self.entropy_weight,
            "use_baseline": self.use_baseline,
            "baseline_decay": self.baseline_decay,
            "projection_reset_epoch": self.projection_reset_epoch,
        }


@dataclass
class RngStreams:
    split: Rng
    init: Rng
    arch: Rng
    batch: Rng
    absorb: Rng

    @classmethod
    def for_seed(cls, seed: int) -> "RngStreams":
        master = Rng(seed)
        return cls(
            split=master.derive(_STREAM_SPLIT),
            init=master.derive(_STREAM_INIT),
            arch=master.derive(_STREAM_ARCH),
            batch=master.derive(_STREAM_BATCH),
            absorb=master.derive(_STREAM_ABSORB),
        )


def split_dataset(data: Batch, fraction: float, rng: Rng) -> tuple[Batch, Batch]:
    """Shuffled split; the first ``fraction`` of rows train, the rest validate."""
    n = data.size
    n_train = int(n * fraction)
    if n_train < 1 or n - n_train < 1:
        raise ConfigError(
            f"split_fraction {fraction} leaves an empty part for {n} samples"
        )
    order = list(range(n))
    rng.shuffle(order)
    return data.take(order[:n_train]), data.take(order[n_train:])


def draw_batch(data: Batch, batch_size: int, rng: Rng) -> Batch:
    """batch_size rows sampled uniformly with replacement."""
    return data.take([rng.randint(data.size) for _ in range(batch_size)])


def train_arch_step(
    spec: CellSpec,
    store: SharedParamStore,
    arch: ArchEncoding,
    batch: Batch,
    cfg: TrainConfig,
    absorb_rng: Rng,
) -> float:
    """One update of every shared layer in ``arch`` on one batch; returns the loss.

    In di mode the parameter step strictly precedes the absorption of the
    batch's input features, so the projection applied to each gradient never
    contains the current batch.
    """
    result = subnet_forward(spec, arch, batch, store)
    xent = softmax_xent(result.logits, batch.labels)
    grads = backward(result.tape, xent.grad_logits)
    touched = result.tape.param_ids()
    for key in touched:
        g = grads.get(key)
        if g is None:
            continue
        w = store.weight(key)
        if cfg.mode == MODE_DI:
            store.set_weight(key, projected_step(w, g, store.projection(key), cfg.eta_w))
        else:
            store.set_weight(key, w - cfg.eta_w * g)
    if cfg.mode == MODE_DI:
        for key, activations in result.tape.linear_inputs():
            absorb_batch(store.projection(key), activations.T, cfg.absorb_cap, absorb_rng)
    return xent.loss


@dataclass
class StepRecord:
    arch: str
    loss: float | None
    reward: float | None

    def to_doc(self) -> dict:
        return {"arch": self.arch, "loss": self.loss, "reward": self.reward}


@dataclass
class PhaseRecord:
    phase: str  # "supernet" | "controller"
    steps: list[StepRecord]

    def to_doc(self) -> dict:
        return {"phase": self.phase, "steps": [s.to_doc() for s in self.steps]}


def supernet_phase(
    spec: CellSpec,
    store: SharedParamStore,
    policy: PolicyParams,
    train_data: Batch,
    cfg: TrainConfig,
    streams: RngStreams,
    use_policy: bool,
) -> PhaseRecord:
    steps = []
    for _ in range(cfg.t_n):
        if use_policy:
            arch = sample_arch(policy, streams.arch).arch
        else:
            arch = sample_uniform(spec, streams.arch)
        batch = draw_batch(train_data, cfg.batch_size, streams.batch)
        loss = train_arch_step(spec, store, arch, batch, cfg, streams.absorb)
        steps.append(StepRecord(encode(arch), loss, None))
    return PhaseRecord("supernet", steps)


def controller_phase(
    spec: CellSpec,
    store: SharedParamStore,
    policy: PolicyParams,
    val_data: Batch,
    cfg: TrainConfig,
    streams: RngStreams,
) -> PhaseRecord:
    steps = []
    for _ in range(cfg.t_c):
        sampled = sample_arch(policy, streams.arch)
        batch = draw_batch(val_data, cfg.batch_size, streams.batch)
        result = subnet_forward(spec, sampled.arch, batch, store)
        reward = accuracy(result.logits, batch.labels)
        reinforce_update(policy, sampled.arch, reward, cfg.eta_theta)
        steps.append(StepRecord(encode(sampled.arch), None, reward))
    return PhaseRecord("controller", steps)


@dataclass
class RunRecord:
    config_doc: dict
    seed: int
    phases: list[PhaseRecord]
    final_policy: PolicyParams
    store: SharedParamStore = field(repr=False)

    def to_doc(self) -> dict:
        return {
            "format": RECORD_FORMAT,
            "config": self.config_doc,
            "seeds": {"master": self.seed},
            "epochs": [p.to_doc() for p in self.phases],
            "final_policy": policy_to_doc(self.final_policy),
            "store_checkpoint": self.store.to_doc(),
        }


def run(
    spec: CellSpec, cfg: TrainConfig, dataset: Batch, config_doc: dict | None = None
) -> RunRecord:
    """The full alternating training scheme over a dataset."""
    cfg.validate()
    if dataset.size == 0:
        raise ConfigError("dataset is empty")
    streams = RngStreams.for_seed(cfg.seed)
    train_data, val_data = split_dataset(dataset, cfg.split_fraction, streams.split)
    store = SharedParamStore.build(spec, cfg.lam, streams.init)
    policy = init_policy(
        spec,
        entropy_weight=cfg.entropy_weight,
        use_baseline=cfg.use_baseline,
        baseline_decay=cfg.baseline_decay,
    )
    phases: list[PhaseRecord] = []
    for epoch in range(cfg.epochs):
        if cfg.projection_reset_epoch == epoch:
            store.reset_projections()
        controller_active = epoch >= cfg.controller_start_epoch
        phases.append(
            supernet_phase(spec, store, policy, train_data, cfg, streams, controller_active)
        )
        if controller_active:
            phases.append(controller_phase(spec, store, policy, val_data, cfg, streams))
    return RunRecord(
        config_doc=config_doc if config_doc is not None else cfg.to_doc(),
        seed=cfg.seed,
        phases=phases,
        final_policy=policy,
        store=store,
    )


# --- convergence-rate validation on convex quadratics ---


@dataclass
class QuadraticSpec:
    """L(w) = 0.5 * ||A w - b||^2 with a unique minimizer."""

    a: np.ndarray
    b: np.ndarray
    w0: np.ndarray

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64).reshape(-1)
        self.w0 = np.asarray(self.w0, dtype=np.float64).reshape(-1)
        if self.a.ndim != 2 or self.a.shape[0] != self.b.shape[0]:
            raise UsageError("A and b have incompatible shapes")
        if self.a.shape[1] != self.w0.shape[0]:
            raise UsageError("A and w0 have incompatible shapes")
        hess = self.a.T @ self.a
        eigs = np.linalg.eigvalsh(hess)
        if eigs.min() <= 1e-12 * max(1.0, eigs.max()):
            raise UsageError(
                "A^T A is singular or not positive definite; the quadratic has no unique minimizer"
            )

    @property
    def smoothness(self) -> float:
        return float(np.linalg.eigvalsh(self.a.T @ self.a).max())

    @property
    def minimizer(self) -> np.ndarray:
        return np.linalg.lstsq(self.a, self.b, rcond=None)[0]

    def loss(self, w: np.ndarray) -> float:
        r = self.a @ w - self.b
        return 0.5 * float(r @ r)

    def grad(self, w: np.ndarray) -> np.ndarray:
        return self.a.T @ (self.a @ w - self.b)


@dataclass(frozen=True)
class RateCheck:
    gaps: list[float]
    holds: bool


def check_convergence_rate(quad: QuadraticSpec, eta: float, steps: int) -> RateCheck:
    """Plain gradient descent must satisfy gap(t) <= (2L/t) * ||w0 - w*||^2."""
    big_l = quad.smoothness
    w_star = quad.minimizer
    loss_star = quad.loss(w_star)
    dist0_sq = float(np.sum((quad.w0 - w_star) ** 2))
    w = quad.w0.copy()
    gaps = []
    holds = True
    for t in range(1, steps + 1):
        w = w - eta * quad.grad(w)
        gap = quad.loss(w) - loss_star
        gaps.append(gap)
        if gap > (2.0 * big_l / t) * dist0_sq + 1e-9:
            holds = False
    return RateCheck(gaps=gaps, holds=holds)


@dataclass(frozen=True)
class DescentCheck:
    losses: list[float]
    holds: bool


def check_monotone_descent(
    quad: QuadraticSpec, proj: np.ndarray, eta: float, steps: int
) -> DescentCheck:
    """Projected steps with any symmetric PSD P (||P||_2 <= 1) never increase the loss."""
    p = np.asarray(proj, dtype=np.float64)
    n = quad.w0.shape[0]
    if p.shape != (n, n):
        raise UsageError(f"projection shape {p.shape} does not match dimension {n}")
    if not np.allclose(p, p.T, atol=1e-9):
        raise UsageError("projection must be symmetric")
    eigs = np.linalg.eigvalsh((p + p.T) / 2.0)
    if eigs.min() < -1e-9 or eigs.max() > 1.0 + 1e-9:
        raise UsageError("projection must be PSD with spectral norm at most 1")
    w = quad.w0.copy()
    losses = [quad.loss(w)]
    holds = True
    for _ in range(steps):
        w = w - eta * (p @ quad.grad(w))
        losses.append(quad.loss(w))
        if losses[-1] > losses[-2] + 1e-9:
            holds = False
    return DescentCheck(losses=losses, holds=holds)
