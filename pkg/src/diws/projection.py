"""Orthogonal-gradient-descent primitives.

Each shared layer carries a d-by-d projection matrix P, identity at start,
that shrinks as input feature vectors are folded in. Gradients multiplied by
P leave the layer's outputs on previously absorbed inputs almost unchanged,
which is what makes sequential weight-sharing training disturbance-immune.

Two equivalent constructions are provided. ``batch_projection`` builds P
directly from a full feature matrix X (columns are feature vectors) as

    P = I - X (lam*I + X^T X)^{-1} X^T

which, by the push-through identity, equals ``lam * (lam*I + X X^T)^{-1}``.
``absorb_sample`` maintains the same P one vector at a time through the
rank-one (Sherman-Morrison/Woodbury) update

    P <- P - (P x x^T P) / (lam + x^T P x)

so no feature history has to be stored. Training uses the recursion; the
batch form serves as oracle and for the output-change bound check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericalError, UsageError
from .rng import Rng

# Solves involving matrices conditioned worse than this fail loudly.
CONDITION_CAP = 1e12


@dataclass
class ProjectionState:
    """Per-layer projection matrix with its regularization constant."""

    p: np.ndarray
    lam: float
    absorbed_count: int = 0

    @property
    def dim(self) -> int:
        return self.p.shape[0]

    def copy(self) -> "ProjectionState":
        return ProjectionState(self.p.copy(), self.lam, self.absorbed_count)

    def reset(self) -> None:
        self.p = np.eye(self.dim)
        self.absorbed_count = 0


def init_projection(d: int, lam: float) -> ProjectionState:
    if d < 1:
        raise ConfigError(f"projection dimension must be >= 1, got {d}")
    if not lam > 0:
        raise ConfigError(f"regularization constant must be > 0, got {lam}")
    return ProjectionState(np.eye(d), float(lam), 0)


def batch_projection(x_cols: np.ndarray, lam: float) -> np.ndarray:
    """Direct projection matrix from a d-by-N feature matrix (features as columns)."""
    if not lam > 0:
        raise ConfigError(f"regularization constant must be > 0, got {lam}")
    x = np.asarray(x_cols, dtype=np.float64)
    if x.ndim != 2:
        raise UsageError(f"feature matrix must be 2-D, got shape {x.shape}")
    d, n = x.shape
    gram = lam * np.eye(n) + x.T @ x
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > CONDITION_CAP:
        raise NumericalError(
            f"regularized Gram matrix is too ill-conditioned to invert (cond={cond:.3e})"
        )
    p = np.eye(d) - x @ np.linalg.solve(gram, x.T)
    p = (p + p.T) / 2.0
    if not np.isfinite(p).all():
        raise NumericalError("projection matrix contains non-finite entries")
    return p


def absorb_sample(state: ProjectionState, x: np.ndarray) -> ProjectionState:
    """Fold one feature vector into the projection via the rank-one update."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != state.dim:
        raise UsageError(
            f"feature vector has length {x.shape[0]}, projection dimension is {state.dim}"
        )
    px = state.p @ x
    denom = state.lam + x @ px
    state.p -= np.outer(px, px) / denom
    state.p = (state.p + state.p.T) / 2.0  # suppress float drift off symmetry
    state.absorbed_count += 1
    if not np.isfinite(state.p).all():
        raise NumericalError("projection matrix contains non-finite entries after absorb")
    return state


def absorb_batch(
    state: ProjectionState, x_cols: np.ndarray, cap: int, rng: Rng | None = None
) -> ProjectionState:
    """Fold in at most ``cap`` columns of a d-by-N feature matrix.

    When N exceeds the cap, a uniform subsample of columns is taken from
    ``rng`` (absorbed in ascending column order; the result is order-invariant
    up to float error anyway).
    """
    if cap < 1:
        raise UsageError(f"absorb cap must be >= 1, got {cap}")
    x = np.asarray(x_cols, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != state.dim:
        raise UsageError(
            f"feature matrix shape {x.shape} does not match projection dimension {state.dim}"
        )
    n = x.shape[1]
    if n <= cap:
        cols = range(n)
    else:
        if rng is None:
            raise UsageError("subsampling requires an rng when the cap is binding")
        cols = rng.sample_indices(n, cap)
    for j in cols:
        absorb_sample(state, x[:, j])
    return state


def projected_step(
    w: np.ndarray, g: np.ndarray, state: ProjectionState, eta: float
) -> np.ndarray:
    """One orthogonal-gradient-descent step: W - eta * P @ G."""
    w = np.asarray(w, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if w.shape != g.shape:
        raise UsageError(f"weight shape {w.shape} does not match gradient shape {g.shape}")
    if w.shape[0] != state.dim:
        raise UsageError(
            f"weight row dimension {w.shape[0]} does not match projection dimension {state.dim}"
        )
    out = w - eta * (state.p @ g)
    if not np.isfinite(out).all():
        raise NumericalError("projected step produced non-finite weights")
    return out


@dataclass(frozen=True)
class BoundCheck:
    """Observed output change of a projected step against its analytic cap."""

    delta: float
    bound: float
    holds: bool


def check_output_change_bound(
    w: np.ndarray, g: np.ndarray, x_cols: np.ndarray, lam: float, eta: float
) -> BoundCheck:
    """Verify that one projected step moves W^T X by no more than the analytic bound.

    The bound is  eta * lam * sqrt(d) * ||G^T||_F * D(X)  with
    D(X) = ||X||_F * R(X) * (1 + lam * R(X)) and R(X) the spectral norm of
    (X X^T)^{-1}. X must have full row rank for R(X) to exist.
    """
    w = np.asarray(w, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    x = np.asarray(x_cols, dtype=np.float64)
    if w.shape != g.shape:
        raise UsageError(f"weight shape {w.shape} does not match gradient shape {g.shape}")
    if x.ndim != 2 or x.shape[0] != w.shape[0]:
        raise UsageError(
            f"feature matrix shape {x.shape} does not match weight row dimension {w.shape[0]}"
        )
    d = x.shape[0]
    xxt = x @ x.T
    cond = np.linalg.cond(xxt)
    if not np.isfinite(cond) or cond > CONDITION_CAP:
        raise UsageError(
            f"X @ X.T is singular or near-singular (cond={cond:.3e}); "
            "the output-change bound requires full row rank"
        )
    p = batch_projection(x, lam)
    w_next = w - eta * (p @ g)
    delta = float(np.linalg.norm(w_next.T @ x - w.T @ x, "fro"))
    r = float(np.linalg.norm(np.linalg.inv(xxt), 2))
    d_x = float(np.linalg.norm(x, "fro")) * r * (1.0 + lam * r)
    bound = eta * lam * np.sqrt(d) * float(np.linalg.norm(g.T, "fro")) * d_x
    return BoundCheck(delta=delta, bound=bound, holds=bool(delta <= bound + 1e-9))
