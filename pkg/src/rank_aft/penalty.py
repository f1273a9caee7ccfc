"""Penalty configurations, proximal operators and largest useful penalty level.

Two penalties are supported. The elastic net combines a weighted L1 term with
an (unweighted) ridge term; the sparse group lasso combines a weighted L1
term with weighted group L2 norms over a partition of the coefficients. Both
have two-step closed-form proximal operators: coordinatewise soft threshold
first, then either a ridge rescale or a groupwise soft threshold.

The largest useful penalty level is the smallest value at which the all-zero
coefficient vector satisfies the optimality conditions of the penalized rank
loss, so fitting there returns an exactly sparse model.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

ELASTIC_NET = "elastic_net"
SPARSE_GROUP_LASSO = "sparse_group_lasso"


@dataclass(frozen=True, eq=False)
class PenaltySpec:
    """Configuration for one of the supported penalties.

    Attributes
    ----------
    kind : str
        ``"elastic_net"`` or ``"sparse_group_lasso"``.
    alpha : float
        Mixing weight in [0, 1]; 1 is pure L1.
    weights : (p,) array
        Nonnegative per-coefficient L1 weights. A coefficient with weight 0
        receives no L1 shrinkage.
    groups : tuple of arrays
        Partition of {0..p-1} into index arrays (group penalty only).
    group_weights : (G,) array
        Nonnegative per-group weights (group penalty only).
    group_ids : (p,) array
        Group index of each coefficient (group penalty only).
    """

    kind: str
    alpha: float
    weights: np.ndarray
    groups: tuple = ()
    group_weights: np.ndarray | None = None
    group_ids: np.ndarray | None = None

    @property
    def p(self) -> int:
        return self.weights.shape[0]


def elastic_net(p: int, alpha: float = 1.0, weights=None) -> PenaltySpec:
    """Elastic net penalty on p coefficients. Default weights are all ones."""
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    w = np.ones(p) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (p,) or np.any(w < 0):
        raise ValueError("weights must be a nonnegative vector of length p")
    return PenaltySpec(kind=ELASTIC_NET, alpha=alpha, weights=w)


def sparse_group_lasso(groups, alpha: float = 0.0, weights=None, group_weights=None) -> PenaltySpec:
    """Sparse group lasso penalty over a partition of the coefficients.

    ``groups`` is a sequence of index arrays that must partition {0..p-1}.
    Default per-group weights are sqrt(group size); default coefficient
    weights are all ones. A coefficient is fully unpenalized only when its
    weight is 0 and it sits in a group with weight 0.
    """
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    groups = tuple(np.asarray(g, dtype=int) for g in groups)
    if not groups or any(g.size == 0 for g in groups):
        raise ValueError("groups must be non-empty index arrays")
    all_idx = np.concatenate(groups)
    p = all_idx.size
    if not np.array_equal(np.sort(all_idx), np.arange(p)):
        raise ValueError("groups must form a partition of {0..p-1}")
    w = np.ones(p) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (p,) or np.any(w < 0):
        raise ValueError("weights must be a nonnegative vector of length p")
    if group_weights is None:
        v = np.sqrt(np.array([g.size for g in groups], dtype=float))
    else:
        v = np.asarray(group_weights, dtype=float)
    if v.shape != (len(groups),) or np.any(v < 0):
        raise ValueError("group_weights must be a nonnegative vector, one entry per group")
    gids = np.empty(p, dtype=int)
    for gi, g in enumerate(groups):
        gids[g] = gi
    return PenaltySpec(
        kind=SPARSE_GROUP_LASSO,
        alpha=alpha,
        weights=w,
        groups=groups,
        group_weights=v,
        group_ids=gids,
    )


def _soft(z: np.ndarray, thresh: np.ndarray) -> np.ndarray:
    return np.sign(z) * np.maximum(np.abs(z) - thresh, 0.0)


def prox(spec: PenaltySpec, z: np.ndarray, t: float) -> np.ndarray:
    """Proximal operator of t * penalty, i.e. argmin_b 0.5 ||z-b||^2 + t*g(b)."""
    if t <= 0:
        raise ValueError("prox step size t must be positive")
    z = np.asarray(z, dtype=float)
    if z.shape != (spec.p,):
        raise ValueError(f"expected a vector of length {spec.p}, got shape {z.shape}")
    a = _soft(z, spec.alpha * t * spec.weights)
    if spec.kind == ELASTIC_NET:
        return a / (1.0 + (1.0 - spec.alpha) * t)
    norms = np.sqrt(np.bincount(spec.group_ids, weights=a * a, minlength=len(spec.groups)))
    cut = (1.0 - spec.alpha) * t * spec.group_weights
    scale = np.zeros_like(norms)
    pos = norms > 0
    scale[pos] = np.maximum(norms[pos] - cut[pos], 0.0) / norms[pos]
    return a * scale[spec.group_ids]


def penalty_value(spec: PenaltySpec, coef: np.ndarray) -> float:
    """Value of the penalty function g (the tuning parameter excluded)."""
    coef = np.asarray(coef, dtype=float)
    if coef.shape != (spec.p,):
        raise ValueError(f"expected a vector of length {spec.p}, got shape {coef.shape}")
    l1 = spec.alpha * float(np.abs(spec.weights * coef).sum())
    if spec.kind == ELASTIC_NET:
        return l1 + 0.5 * (1.0 - spec.alpha) * float(coef @ coef)
    norms = np.sqrt(np.bincount(spec.group_ids, weights=coef * coef, minlength=len(spec.groups)))
    return l1 + (1.0 - spec.alpha) * float(spec.group_weights @ norms)


def sparsity_mask(spec: PenaltySpec) -> np.ndarray:
    """Coefficients that the penalty can shrink to exactly zero."""
    l1 = spec.alpha * spec.weights > 0
    if spec.kind == ELASTIC_NET:
        return l1
    return l1 | ((1.0 - spec.alpha) * spec.group_weights[spec.group_ids] > 0)


def _rank_scores(data) -> tuple[np.ndarray, np.ndarray]:
    """Per-column pieces of the rank-loss subgradient interval at coef = 0.

    Returns (linear, ties): ``linear[k]`` is the signed double sum
    sum_{i,j} delta_i (x_ik - x_jk) 1(y_i < y_j) and ``ties[k]`` the
    nonnegative slack sum_{y_i = y_j} delta_i |x_ik - x_jk| contributed by
    tied observation times. Neither is divided by n^2.
    """
    ly = data.log_y
    X = data.X
    delta = data.delta
    n, p = X.shape
    order = np.argsort(ly, kind="stable")
    ly_sorted = ly[order]
    # block boundaries of equal log-times, scanned from the largest down
    boundaries = np.flatnonzero(np.diff(ly_sorted) != 0) + 1
    blocks = np.split(order, boundaries)
    linear = np.zeros(p)
    ties = np.zeros(p)
    count_gt = 0
    sum_gt = np.zeros(p)
    for block in reversed(blocks):
        ev = block[delta[block] == 1.0]
        if ev.size:
            linear += count_gt * X[ev].sum(axis=0) - ev.size * sum_gt
            if block.size > 1:
                for i in ev:
                    ties += np.abs(X[i] - X[block]).sum(axis=0)
        count_gt += block.size
        sum_gt += X[block].sum(axis=0)
    return linear, ties


def _score_lambda_max_en(score: np.ndarray, spec: PenaltySpec) -> float:
    """Smallest L1-type penalty level dominating a nonnegative score vector."""
    if spec.alpha == 0:
        raise ValueError("the ridge penalty never yields an exactly zero solution")
    unpenalized = spec.weights == 0
    if np.any(score[unpenalized] > 0):
        raise ValueError(
            "lambda_max undefined: an unpenalized coefficient has a nonzero score"
        )
    penalized = ~unpenalized
    if not np.any(penalized):
        raise ValueError("degenerate design: no penalized coefficients")
    vals = score[penalized] / (spec.alpha * spec.weights[penalized])
    out = float(vals.max())
    if out <= 0:
        raise ValueError("degenerate design: all penalized columns have zero score")
    return out


def _group_root(score: np.ndarray, thr_slope: np.ndarray, rhs_slope: float) -> float:
    """Smallest lam >= 0 with ||max(score - lam*thr_slope, 0)||^2 <= (rhs_slope*lam)^2.

    The left side is piecewise quadratic in lam with breakpoints where each
    coordinate's soft threshold reaches zero; the difference of the two sides
    changes sign exactly once, so the first interval whose right end is
    nonpositive contains the root.
    """
    if not np.any(score > 0):
        return 0.0
    if rhs_slope == 0:
        bad = (thr_slope == 0) & (score > 0)
        if np.any(bad):
            raise ValueError(
                "lambda_max undefined: an unpenalized coordinate has a nonzero score"
            )
        active = score > 0
        return float(np.max(score[active] / thr_slope[active]))
    with np.errstate(divide="ignore"):
        breaks = np.where(thr_slope > 0, score / np.where(thr_slope > 0, thr_slope, 1.0), np.inf)
    finite = np.unique(breaks[np.isfinite(breaks)])
    lo = 0.0
    for hi in list(finite) + [np.inf]:
        active = breaks > lo
        c2 = float((thr_slope[active] ** 2).sum()) - rhs_slope**2
        c1 = -2.0 * float((score[active] * thr_slope[active]).sum())
        c0 = float((score[active] ** 2).sum())
        if np.isfinite(hi) and (c2 * hi + c1) * hi + c0 > 0.0:
            lo = hi
            continue
        # the root lies in (lo, hi]; c1 <= 0, so the numerically stable
        # quadratic root c0 / qq is the sign change for any sign of c2
        disc = max(c1 * c1 - 4.0 * c2 * c0, 0.0)
        qq = 0.5 * (-c1 + math.sqrt(disc))
        if qq == 0.0:
            return float(lo)
        return float(c0 / qq)
    raise AssertionError("unreachable: the final interval always brackets a root")


def _score_lambda_max_sgl(score: np.ndarray, spec: PenaltySpec) -> float:
    out = 0.0
    for gi, g in enumerate(spec.groups):
        root = _group_root(
            score[g],
            spec.alpha * spec.weights[g],
            (1.0 - spec.alpha) * float(spec.group_weights[gi]),
        )
        out = max(out, root)
    if out <= 0:
        raise ValueError("degenerate design: all groups have zero score")
    return out


def lambda_max_elastic_net(data, spec: PenaltySpec) -> float:
    """Smallest elastic net penalty level at which the fit is exactly zero.

    Tied observation times widen the subgradient interval of the rank loss,
    so their contribution is added to the score of each coordinate.
    """
    if spec.kind != ELASTIC_NET:
        raise ValueError("spec is not an elastic net penalty")
    if spec.p != data.p:
        raise ValueError("penalty and data disagree on the number of coefficients")
    linear, ties = _rank_scores(data)
    score = (np.abs(linear) + ties) / data.n**2
    return _score_lambda_max_en(score, spec)


def lambda_max_sparse_group(data, spec: PenaltySpec, options=None) -> float:
    """Smallest sparse group lasso penalty level with an exactly zero fit.

    Without tied times the subgradient of the rank loss at zero is unique and
    the level solves a per-group piecewise-quadratic equation exactly. With
    ties we start from ten times that bound and shrink by 5% per trial,
    fitting at each value, until a fit turns some coefficient on; the
    previous trial value is returned.
    """
    if spec.kind != SPARSE_GROUP_LASSO:
        raise ValueError("spec is not a sparse group lasso penalty")
    if spec.p != data.p:
        raise ValueError("penalty and data disagree on the number of coefficients")
    linear, ties = _rank_scores(data)
    base = _score_lambda_max_sgl(np.abs(linear) / data.n**2, spec)
    if not np.any(ties > 0):
        return base
    return _shrink_to_lambda_max(data, spec, 10.0 * base, options)


def _shrink_to_lambda_max(data, spec, start: float, options) -> float:
    from .solver import SolverOptions, fit  # deferred: solver depends on this module

    from .data import build_pairs

    opts = options if options is not None else SolverOptions()
    pairs = build_pairs(data)
    mask = sparsity_mask(spec)

    def is_zero(lam):
        res = fit(data, pairs, spec, lam, options=opts)
        return not np.any(res.coef[mask])

    lam = start
    for _ in range(8):
        if is_zero(lam):
            break
        lam *= 10.0
    else:
        raise ValueError("could not find a penalty level with an all-zero fit")
    for _ in range(500):
        trial = 0.95 * lam
        if not is_zero(trial):
            return lam
        lam = trial
    raise ValueError("penalty level search did not terminate; data may be degenerate")


def lambda_max(data, spec: PenaltySpec, options=None) -> float:
    """Dispatch to the penalty-appropriate largest useful level."""
    if spec.kind == ELASTIC_NET:
        return lambda_max_elastic_net(data, spec)
    return lambda_max_sparse_group(data, spec, options)


def lambda_grid(lam_max: float, n_lambda: int, kappa: float) -> np.ndarray:
    """Log-spaced decreasing grid from lam_max down to kappa * lam_max."""
    if n_lambda < 1:
        raise ValueError("n_lambda must be at least 1")
    if not 0.0 < kappa < 1.0:
        raise ValueError("kappa must lie strictly between 0 and 1")
    if lam_max <= 0:
        raise ValueError("lam_max must be positive")
    grid = np.logspace(math.log10(lam_max), math.log10(kappa * lam_max), n_lambda)
    grid[0] = lam_max
    return grid


def load_groups_csv(path, feature_names) -> tuple[tuple, list[str]]:
    """Read group assignments from a feature,group CSV.

    Group labels are mapped to indices in order of first appearance. Every
    feature must be assigned to exactly one group.
    """
    feature_names = list(feature_names)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["feature", "group"]:
            raise ValueError(f"{path}: header must be 'feature,group'")
        assignment: dict[str, str] = {}
        labels: list[str] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) < 2:
                raise ValueError(f"{path}:{lineno}: expected two fields")
            feat, label = row[0].strip(), row[1].strip()
            if feat in assignment:
                raise ValueError(f"{path}:{lineno}: feature {feat!r} assigned twice")
            if feat not in feature_names:
                raise ValueError(f"{path}:{lineno}: unknown feature {feat!r}")
            assignment[feat] = label
            if label not in labels:
                labels.append(label)
    missing = [f for f in feature_names if f not in assignment]
    if missing:
        raise ValueError(f"{path}: features without a group: {', '.join(missing)}")
    groups = tuple(
        np.array([k for k, f in enumerate(feature_names) if assignment[f] == label], dtype=int)
        for label in labels
    )
    return groups, labels
