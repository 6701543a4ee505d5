"""Architecture controller: a factorized categorical policy trained by REINFORCE.

One independent categorical per edge. The update ascends
``advantage * grad(log pi)`` plus a small entropy bonus, where the advantage
is the reward minus an optional exponential-moving-average baseline (with the
baseline disabled the update is plain reward-weighted REINFORCE).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import isfinite

import numpy as np

from .errors import NumericalError, UsageError
from .rng import Rng
from .space import ArchEncoding, CellSpec


@dataclass
class PolicyParams:
    logits: np.ndarray  # num_edges x num_ops
    entropy_weight: float = 0.005
    use_baseline: bool = True
    baseline_decay: float = 0.9
    baseline: float | None = None  # unset until the first reward arrives

    def copy(self) -> "PolicyParams":
        return PolicyParams(
            self.logits.copy(),
            self.entropy_weight,
            self.use_baseline,
            self.baseline_decay,
            self.baseline,
        )


def init_policy(
    spec: CellSpec,
    entropy_weight: float = 0.005,
    use_baseline: bool = True,
    baseline_decay: float = 0.9,
) -> PolicyParams:
    """Uniform policy (all logits zero)."""
    return PolicyParams(
        logits=np.zeros((spec.num_edges, spec.num_ops)),
        entropy_weight=entropy_weight,
        use_baseline=use_baseline,
        baseline_decay=baseline_decay,
    )


def edge_probs(policy: PolicyParams) -> np.ndarray:
    z = policy.logits - policy.logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _edge_log_probs(policy: PolicyParams) -> np.ndarray:
    z = policy.logits - policy.logits.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def _validate_arch(policy: PolicyParams, arch: ArchEncoding) -> None:
    num_edges, num_ops = policy.logits.shape
    if len(arch.choices) != num_edges:
        raise UsageError(
            f"architecture has {len(arch.choices)} choices for a {num_edges}-edge policy"
        )
    for c in arch.choices:
        if not 0 <= c < num_ops:
            raise UsageError(f"operation index {c} out of range for {num_ops} ops")


@dataclass(frozen=True)
class ArchSample:
    arch: ArchEncoding
    log_prob: float


def sample_arch(policy: PolicyParams, rng: Rng) -> ArchSample:
    """Independent categorical draw per edge (inverse-CDF on one uniform each)."""
    probs = edge_probs(policy)
    choices = []
    for e in range(probs.shape[0]):
        u = rng.uniform()
        acc = 0.0
        pick = probs.shape[1] - 1
        for o in range(probs.shape[1]):
            acc += probs[e, o]
            if u < acc:
                pick = o
                break
        choices.append(pick)
    arch = ArchEncoding(tuple(choices))
    return ArchSample(arch=arch, log_prob=log_prob(policy, arch))


def log_prob(policy: PolicyParams, arch: ArchEncoding) -> float:
    _validate_arch(policy, arch)
    lp = _edge_log_probs(policy)
    return float(sum(lp[e, c] for e, c in enumerate(arch.choices)))


def entropy(policy: PolicyParams) -> float:
    """Sum of per-edge categorical entropies."""
    p = edge_probs(policy)
    lp = _edge_log_probs(policy)
    return float(-(p * lp).sum())


def log_prob_grad(policy: PolicyParams, arch: ArchEncoding) -> np.ndarray:
    """d log pi / d logits: onehot(choice) - softmax, per edge."""
    _validate_arch(policy, arch)
    grad = -edge_probs(policy)
    for e, c in enumerate(arch.choices):
        grad[e, c] += 1.0
    return grad


def entropy_grad(policy: PolicyParams) -> np.ndarray:
    """d entropy / d logits = -p * (log p - sum_j p_j log p_j), per edge."""
    p = edge_probs(policy)
    lp = _edge_log_probs(policy)
    mean_lp = (p * lp).sum(axis=1, keepdims=True)
    return -p * (lp - mean_lp)


def reinforce_update(
    policy: PolicyParams, arch: ArchEncoding, reward: float, eta: float
) -> PolicyParams:
    """One policy-gradient ascent step; updates the baseline afterwards."""
    if not isfinite(reward):
        raise NumericalError(f"reward must be finite, got {reward}")
    _validate_arch(policy, arch)
    if policy.use_baseline:
        if policy.baseline is None:
            policy.baseline = float(reward)
        advantage = reward - policy.baseline
    else:
        advantage = reward
    step = eta * advantage * log_prob_grad(policy, arch)
    if policy.entropy_weight:
        step += eta * policy.entropy_weight * entropy_grad(policy)
    policy.logits += step
    if policy.use_baseline:
        policy.baseline = policy.baseline_decay * policy.baseline + (
            1.0 - policy.baseline_decay
        ) * float(reward)
    return policy


def argmax_arch(policy: PolicyParams) -> ArchEncoding:
    """Per-edge argmax; ties break to the lowest operation index."""
    return ArchEncoding(tuple(int(i) for i in policy.logits.argmax(axis=1)))


def policy_to_doc(policy: PolicyParams) -> dict:
    return {
        "logits": policy.logits.tolist(),
        "entropy_weight": policy.entropy_weight,
        "use_baseline": policy.use_baseline,
        "baseline_decay": policy.baseline_decay,
        "baseline": policy.baseline,
    }


def policy_from_doc(doc: dict) -> PolicyParams:
    return PolicyParams(
        logits=np.asarray(doc["logits"], dtype=np.float64),
        entropy_weight=float(doc["entropy_weight"]),
        use_baseline=bool(doc["use_baseline"]),
        baseline_decay=float(doc["baseline_decay"]),
        baseline=None if doc["baseline"] is None else float(doc["baseline"]),
    )
