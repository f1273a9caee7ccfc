"""K-fold cross-validation for penalty-level selection.

Two criteria are computed from one set of fold fits. The within-fold rank
loss averages, over folds, the loss of the held-out subjects evaluated among
themselves; it degenerates when folds hold few events and cannot be used
with leave-one-out splits. The pooled linear-predictor criterion instead
collects every subject's held-out linear predictor (each produced by the
model not trained on that subject) and evaluates one rank loss over the full
index set, so it remains well defined for any number of folds up to n.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from .data import SurvivalDataset, build_pairs
from .penalty import PenaltySpec
from .path import fit_path
from .solver import SolverOptions

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CvResult:
    """Per-penalty-level cross-validation summaries.

    ``cv_linear_predictor`` is the pooled criterion (unnormalized double
    sum); ``cv_gehan_loss``/``cv_gehan_se`` are the mean and standard error
    over folds of the within-fold rank loss. The selected levels are the
    pooled-criterion minimizer (ties broken toward the larger, sparser level)
    and the one-standard-error choice from the within-fold criterion.
    """

    lambdas: np.ndarray
    cv_linear_predictor: np.ndarray
    cv_gehan_loss: np.ndarray
    cv_gehan_se: np.ndarray
    fold_assignment: np.ndarray
    best_lambda_lp: float
    best_lambda_1se: float
    n_folds: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "lambdas": [float(x) for x in self.lambdas],
            "cv_lp": [float(x) for x in self.cv_linear_predictor],
            "cv_gehan_mean": [float(x) for x in self.cv_gehan_loss],
            "cv_gehan_se": [float(x) for x in self.cv_gehan_se],
            "best_lambda_lp": float(self.best_lambda_lp),
            "best_lambda_1se": float(self.best_lambda_1se),
            "K": int(self.n_folds),
            "seed": int(self.seed),
        }


def make_folds(n: int, n_folds: int, seed: int) -> np.ndarray:
    """Random fold assignment with sizes differing by at most one."""
    if not 2 <= n_folds <= n:
        raise ValueError("n_folds must lie between 2 and n")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    fold_ids = np.empty(n, dtype=int)
    sizes = np.full(n_folds, n // n_folds)
    sizes[: n % n_folds] += 1
    start = 0
    for k, size in enumerate(sizes):
        fold_ids[perm[start:start + size]] = k
        start += size
    return fold_ids


def _pooled_rank_loss(e_tilde: np.ndarray, delta: np.ndarray) -> float:
    """Unnormalized double sum of delta_i * max(e_j - e_i, 0) over all (i, j)."""
    gaps = np.maximum(e_tilde[None, :] - e_tilde[:, None], 0.0)
    return float(delta @ gaps.sum(axis=1))


def _within_fold_loss(log_y, X, delta, coef) -> float:
    e = log_y - X @ coef
    gaps = np.maximum(e[None, :] - e[:, None], 0.0)
    return float(delta @ gaps.sum(axis=1)) / e.size**2


def cv_linear_predictor_score(data: SurvivalDataset, spec: PenaltySpec,
                              lambdas: np.ndarray, n_folds: int,
                              options: SolverOptions | None = None,
                              seed: int = 0) -> CvResult:
    """Cross-validate along ``lambdas``, computing both selection criteria.

    Each fold's training split is fit along the whole grid with warm starts;
    a training split without any observed event is an error. Held-out folds
    without events (or with a single subject) contribute zero to the
    within-fold criterion, with a warning; the pooled criterion is unaffected
    by such folds.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    n = data.n
    m_total = lambdas.size
    fold_ids = make_folds(n, n_folds, seed)
    e_tilde = np.empty((m_total, n))
    fold_losses = np.zeros((n_folds, m_total))
    for k in range(n_folds):
        held = fold_ids == k
        train_idx = np.flatnonzero(~held)
        if data.delta[train_idx].sum() == 0:
            raise ValueError(f"training split for fold {k} contains no events")
        train = data.subset(train_idx)
        path = fit_path(train, build_pairs(train), spec, options=options, lambdas=lambdas)
        held_idx = np.flatnonzero(held)
        X_held = data.X[held_idx]
        ly_held = data.log_y[held_idx]
        delta_held = data.delta[held_idx]
        degenerate = held_idx.size < 2 or delta_held.sum() == 0
        if degenerate:
            warnings.warn(
                f"fold {k} has no comparable within-fold pairs; "
                "its within-fold rank loss is recorded as 0",
                stacklevel=2,
            )
        for m in range(m_total):
            coef = path.coef_at(m)
            e_tilde[m, held_idx] = ly_held - X_held @ coef
            if not degenerate:
                fold_losses[k, m] = _within_fold_loss(ly_held, X_held, delta_held, coef)
    cv_lp = np.array([_pooled_rank_loss(e_tilde[m], data.delta) for m in range(m_total)])
    gehan_mean = fold_losses.mean(axis=0)
    gehan_se = fold_losses.std(axis=0, ddof=1) / np.sqrt(n_folds)
    # lambdas decrease, so argmin's first hit breaks ties toward sparser fits
    best_lp = float(lambdas[int(np.argmin(cv_lp))])
    best_1se = one_se_rule(gehan_mean, gehan_se, lambdas)
    return CvResult(
        lambdas=lambdas,
        cv_linear_predictor=cv_lp,
        cv_gehan_loss=gehan_mean,
        cv_gehan_se=gehan_se,
        fold_assignment=fold_ids,
        best_lambda_lp=best_lp,
        best_lambda_1se=best_1se,
        n_folds=n_folds,
        seed=seed,
    )


def cv_gehan_loss(data: SurvivalDataset, spec: PenaltySpec, lambdas: np.ndarray,
                  n_folds: int, options: SolverOptions | None = None,
                  seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Mean and standard error over folds of the within-fold rank loss."""
    result = cv_linear_predictor_score(data, spec, lambdas, n_folds, options, seed)
    return result.cv_gehan_loss, result.cv_gehan_se


def one_se_rule(mean: np.ndarray, se: np.ndarray, lambdas: np.ndarray) -> float:
    """Largest level whose mean is within one standard error of the minimum."""
    mean = np.asarray(mean, dtype=float)
    se = np.asarray(se, dtype=float)
    lambdas = np.asarray(lambdas, dtype=float)
    if not mean.shape == se.shape == lambdas.shape:
        raise ValueError("mean, se and lambdas must have identical shapes")
    idx_min = int(np.argmin(mean))
    threshold = mean[idx_min] + se[idx_min]
    qualifying = np.flatnonzero(mean <= threshold)
    return float(lambdas[qualifying[0]])
