"""Slow independent reference solvers used only to validate the fast paths.

Nothing here is meant for production use: the subgradient solver is
deliberately naive (guarded to desk-scale problems) and the prox oracle
re-minimizes the prox objective numerically instead of using closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import ComparablePairSet, SurvivalDataset
from .penalty import ELASTIC_NET, PenaltySpec, penalty_value

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class OracleReport:
    """Comparison of a solver objective against an oracle objective."""

    instance_id: str
    oracle_objective: float
    solver_objective: float
    rel_gap: float
    iterations_used: int


def report(instance_id: str, oracle_objective: float, solver_objective: float,
           iterations_used: int) -> OracleReport:
    gap = (solver_objective - oracle_objective) / max(1.0, abs(oracle_objective))
    return OracleReport(
        instance_id=instance_id,
        oracle_objective=float(oracle_objective),
        solver_objective=float(solver_objective),
        rel_gap=float(gap),
        iterations_used=int(iterations_used),
    )


def golden_section_minimize(objective, lo: float, hi: float, width: float = 1e-10) -> float:
    """Minimize a unimodal scalar function on [lo, hi] to the given width."""
    if lo >= hi:
        raise ValueError("lo must be strictly below hi")
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = objective(c), objective(d)
    while b - a > width:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = objective(d)
    return 0.5 * (a + b)


def gehan_loss_dense(data: SurvivalDataset, coef: np.ndarray) -> float:
    """Rank loss via the full n-by-n double sum; reference path for tests."""
    coef = np.asarray(coef, dtype=float)
    e = data.log_y - data.X @ coef
    gaps = np.maximum(e[None, :] - e[:, None], 0.0)
    return float(data.delta @ gaps.sum(axis=1)) / data.n**2


def _penalty_subgradient(spec: PenaltySpec, coef: np.ndarray) -> np.ndarray:
    out = spec.alpha * spec.weights * np.sign(coef)
    if spec.kind == ELASTIC_NET:
        return out + (1.0 - spec.alpha) * coef
    for gi, g in enumerate(spec.groups):
        norm = np.linalg.norm(coef[g])
        if norm > 0:
            out[g] += (1.0 - spec.alpha) * spec.group_weights[gi] * coef[g] / norm
    return out


def subgradient_solve(data: SurvivalDataset, pairs: ComparablePairSet, spec: PenaltySpec,
                      lam: float, iters: int = 200000, seed: int = 0,
                      step_scale: float = 0.5) -> tuple[np.ndarray, float]:
    """Subgradient descent on the penalized rank objective, tracking the best.

    Steps are step_scale / sqrt(t); hinge kinks use the zero subgradient
    selection. The all-zero point is always evaluated, then iterates start
    from a small seeded random point. Returns the best coefficient vector
    and its objective, an upper bound on the optimum. Guarded to small
    instances; this is a reference implementation, not a solver.
    """
    n, p = data.n, data.p
    if n > 30 or p > 10:
        raise ValueError("subgradient oracle is restricted to n <= 30, p <= 10")
    rng = np.random.default_rng(seed)
    dX = data.X[pairs.i] - data.X[pairs.j]
    dly = data.log_y[pairs.i] - data.log_y[pairs.j]
    d_i = pairs.pair_deltas[:, 0]
    d_j = pairs.pair_deltas[:, 1]
    n2 = n * n

    def objective(coef):
        gaps = dly - dX @ coef
        hinge = float(d_i @ np.maximum(-gaps, 0.0) + d_j @ np.maximum(gaps, 0.0)) / n2
        return hinge + lam * penalty_value(spec, coef)

    best_coef = np.zeros(p)
    best_obj = objective(best_coef)
    coef = 0.01 * rng.standard_normal(p)
    for t in range(1, iters + 1):
        gaps = dly - dX @ coef
        hinge = float(d_i @ np.maximum(-gaps, 0.0) + d_j @ np.maximum(gaps, 0.0)) / n2
        obj = hinge + lam * penalty_value(spec, coef)
        if obj < best_obj:
            best_obj = obj
            best_coef = coef.copy()
        g_loss = dX.T @ (d_i * (gaps < 0) - d_j * (gaps > 0)) / n2
        g = g_loss + lam * _penalty_subgradient(spec, coef)
        coef = coef - (step_scale / math.sqrt(t)) * g
    return best_coef, float(best_obj)


def numeric_prox_oracle(spec: PenaltySpec, z: np.ndarray, t: float) -> np.ndarray:
    """Numerically minimize 0.5 ||z - b||^2 + t * g(b), independent of closed forms.

    The elastic net objective separates across coordinates, so each scalar
    problem is solved by golden-section search. The group penalty couples
    coordinates within a group; those are handed to a generic convex
    programming solver.
    """
    z = np.asarray(z, dtype=float)
    if spec.kind == ELASTIC_NET:
        out = np.empty_like(z)
        for k in range(z.size):
            zk = z[k]
            wk = spec.weights[k]

            def scalar(b, zk=zk, wk=wk):
                return 0.5 * (zk - b) ** 2 + t * (
                    spec.alpha * wk * abs(b) + 0.5 * (1.0 - spec.alpha) * b * b
                )

            bound = abs(zk) + 1.0
            out[k] = golden_section_minimize(scalar, -bound, bound)
        return out
    import cvxpy as cp

    b = cp.Variable(z.size)
    group_term = cp.sum(
        [spec.group_weights[gi] * cp.norm2(b[g]) for gi, g in enumerate(spec.groups)]
    )
    objective = 0.5 * cp.sum_squares(z - b) + t * (
        spec.alpha * cp.sum(cp.multiply(spec.weights, cp.abs(b)))
        + (1.0 - spec.alpha) * group_term
    )
    problem = cp.Problem(cp.Minimize(objective))
    try:
        problem.solve(solver=cp.CLARABEL)
    except (cp.error.SolverError, ValueError):
        problem.solve(solver=cp.ECOS, abstol=1e-10, reltol=1e-10)
    return np.asarray(b.value, dtype=float)
