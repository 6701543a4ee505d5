"""Seeded validation suites behind the `check` subcommand.

Two numerical claims are exercised end to end: the output-change bound of a
single projected step, and the sublinear convergence rate of the update rule
on convex quadratics (plus monotone descent under an arbitrary PSD
projection with spectral norm at most one).
"""

from __future__ import annotations

import numpy as np

from .projection import CONDITION_CAP, check_output_change_bound
from .rng import Rng
from .training import QuadraticSpec, check_convergence_rate, check_monotone_descent


def _full_rank_features(rng: Rng, d: int, n: int) -> np.ndarray:
    """Gaussian d-by-n feature matrix, resampled until X X^T is well conditioned."""
    while True:
        x = rng.normal_matrix(d, n)
        cond = np.linalg.cond(x @ x.T)
        if np.isfinite(cond) and cond < CONDITION_CAP / 1e3:
            return x


def output_change_bound_suite(
    seed: int, instances: int = 100, small_lambda_instances: int = 20
) -> dict:
    rng = Rng(seed).derive(1)
    failures = 0
    max_ratio = 0.0
    for _ in range(instances):
        d = 2 + rng.randint(7)  # 2..8
        n = d + rng.randint(9)  # d..d+8, keeps X X^T invertible
        m = 1 + rng.randint(4)
        w = rng.normal_matrix(d, m)
        g = rng.normal_matrix(d, m)
        x = _full_rank_features(rng, d, n)
        result = check_output_change_bound(w, g, x, lam=1.0, eta=0.1)
        if not result.holds:
            failures += 1
        if result.bound > 0:
            max_ratio = max(max_ratio, result.delta / result.bound)
    small_rng = Rng(seed).derive(2)
    small_failures = 0
    max_relative_change = 0.0
    for _ in range(small_lambda_instances):
        d = 2 + small_rng.randint(7)
        n = d + small_rng.randint(9)
        m = 1 + small_rng.randint(4)
        w = small_rng.normal_matrix(d, m)
        g = small_rng.normal_matrix(d, m)
        x = _full_rank_features(small_rng, d, n)
        result = check_output_change_bound(w, g, x, lam=1e-8, eta=0.1)
        w_norm = float(np.linalg.norm(w, "fro"))
        relative = result.delta / w_norm
        max_relative_change = max(max_relative_change, relative)
        if relative >= 1e-6:
            small_failures += 1
    return {
        "instances": instances,
        "failures": failures,
        "all_hold": failures == 0,
        "max_delta_over_bound": max_ratio,
        "small_lambda": {
            "instances": small_lambda_instances,
            "lambda": 1e-8,
            "failures": small_failures,
            "all_below_threshold": small_failures == 0,
            "max_relative_output_change": max_relative_change,
            "threshold": 1e-6,
        },
        "passed": failures == 0 and small_failures == 0,
    }


def _random_psd_projection(rng: Rng, dim: int) -> np.ndarray:
    q, _ = np.linalg.qr(rng.normal_matrix(dim, dim))
    eigs = np.array([rng.uniform() for _ in range(dim)])
    p = q @ np.diag(eigs) @ q.T
    return (p + p.T) / 2.0


def convergence_rate_suite(seed: int, instances: int = 20, steps: int = 500) -> dict:
    rng = Rng(seed).derive(3)
    rate_failures = 0
    descent_failures = 0
    for _ in range(instances):
        dim = 2 + rng.randint(15)  # 2..16
        a = rng.normal_matrix(dim + 2, dim)
        b = np.array([rng.normal() for _ in range(dim + 2)])
        w0 = np.array([rng.normal() for _ in range(dim)])
        quad = QuadraticSpec(a, b, w0)
        eta = 1.0 / quad.smoothness
        if not check_convergence_rate(quad, eta, steps).holds:
            rate_failures += 1
        proj = _random_psd_projection(rng, dim)
        if not check_monotone_descent(quad, proj, eta, steps).holds:
            descent_failures += 1
    return {
        "instances": instances,
        "steps": steps,
        "rate_failures": rate_failures,
        "descent_failures": descent_failures,
        "rate_holds": rate_failures == 0,
        "descent_holds": descent_failures == 0,
        "passed": rate_failures == 0 and descent_failures == 0,
    }


def run_check_suites(seed: int) -> dict:
    bound = output_change_bound_suite(seed)
    rate = convergence_rate_suite(seed)
    return {
        "seed": seed,
        "output_change_bound": bound,
        "convergence_rate": rate,
        "passed": bool(bound["passed"] and rate["passed"]),
    }
