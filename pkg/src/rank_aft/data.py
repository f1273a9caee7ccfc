"""Censored survival data and the sparse pairwise-difference operator.

A dataset holds log observed times, event indicators and covariates. From it
we build the set of comparable pairs (i, j), i < j, where at least one of the
two subjects experienced the event. The pairwise-difference operator maps an
n-vector v to the vector of differences v[i] - v[j] over that set; it is kept
implicit (only the index pairs are stored) so memory stays proportional to
the number of pairs.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SurvivalDataset:
    """Right-censored survival data on the log-time scale.

    Attributes
    ----------
    log_y : (n,) array
        Natural log of the observed times.
    delta : (n,) array
        Event indicators; 1 means the failure was observed, 0 censored.
    X : (n, p) array
        Covariate matrix.
    feature_names : tuple of str, optional
        Column names for X.
    """

    log_y: np.ndarray
    delta: np.ndarray
    X: np.ndarray
    feature_names: tuple[str, ...] | None = None

    def __post_init__(self):
        log_y = np.atleast_1d(np.asarray(self.log_y, dtype=float))
        delta = np.atleast_1d(np.asarray(self.delta, dtype=float))
        X = np.asarray(self.X, dtype=float)
        if X.ndim != 2:
            raise ValueError("X must be a two-dimensional array")
        n = log_y.shape[0]
        if n < 2:
            raise ValueError("need at least two subjects")
        if delta.shape != (n,) or X.shape[0] != n:
            raise ValueError("log_y, delta and X disagree on the number of subjects")
        if not np.isfinite(log_y).all():
            raise ValueError("log_y contains non-finite values")
        if not np.isfinite(X).all():
            raise ValueError("X contains non-finite values")
        if not np.isin(delta, (0.0, 1.0)).all():
            raise ValueError("delta entries must be 0 or 1")
        if delta.sum() == 0:
            raise ValueError("all subjects are censored; the rank loss is identically zero")
        if self.feature_names is not None and len(self.feature_names) != X.shape[1]:
            raise ValueError("feature_names must have one entry per column of X")
        object.__setattr__(self, "log_y", log_y)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "X", X)
        if self.feature_names is not None:
            object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def n(self) -> int:
        return self.log_y.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @classmethod
    def from_times(cls, y, delta, X, feature_names=None) -> "SurvivalDataset":
        """Build a dataset from raw observed times, taking logs.

        Non-positive or non-finite times are rejected rather than clamped.
        """
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if not np.isfinite(y).all() or np.any(y <= 0):
            raise ValueError("observed times must be positive and finite")
        return cls(np.log(y), delta, X, feature_names)

    def subset(self, idx) -> "SurvivalDataset":
        """Dataset restricted to the subjects selected by idx."""
        return SurvivalDataset(
            self.log_y[idx], self.delta[idx], self.X[idx], self.feature_names
        )


@dataclass(frozen=True)
class ComparablePairSet:
    """Comparable pairs with the implicit pairwise-difference operator.

    Row k of the operator has +1 in column i[k] and -1 in column j[k]; only
    the index arrays are stored. ``pair_deltas`` carries the event indicators
    (delta_i, delta_j) for each pair, in the same row order.
    """

    n: int
    i: np.ndarray
    j: np.ndarray
    pair_deltas: np.ndarray

    @property
    def size(self) -> int:
        return self.i.shape[0]

    @property
    def pairs(self) -> np.ndarray:
        """(|D|, 2) array of index pairs in lexicographic order."""
        return np.column_stack((self.i, self.j))


def build_pairs(data: SurvivalDataset) -> ComparablePairSet:
    """Enumerate all pairs (i, j), i < j, with at least one event.

    Pairs are produced in lexicographic order (by i, then j), which makes the
    construction deterministic. Both-censored pairs are skipped because they
    cannot contribute to the rank loss.
    """
    n = data.n
    if n < 2:
        raise ValueError("need at least two subjects")
    delta = data.delta
    if delta.sum() == 0:
        raise ValueError("all subjects are censored")
    event = delta == 1.0
    ii = []
    jj = []
    for i in range(n - 1):
        if event[i]:
            js = np.arange(i + 1, n)
        else:
            js = (i + 1) + np.flatnonzero(event[i + 1:])
        if js.size:
            ii.append(np.full(js.size, i))
            jj.append(js)
    i_idx = np.concatenate(ii)
    j_idx = np.concatenate(jj)
    pair_deltas = np.column_stack((delta[i_idx], delta[j_idx]))
    return ComparablePairSet(n=n, i=i_idx, j=j_idx, pair_deltas=pair_deltas)


def pair_diff(pairs: ComparablePairSet, v: np.ndarray) -> np.ndarray:
    """Apply the pairwise-difference operator: entry k is v[i_k] - v[j_k]."""
    v = np.asarray(v, dtype=float)
    if v.shape != (pairs.n,):
        raise ValueError(f"expected a vector of length {pairs.n}, got shape {v.shape}")
    return v[pairs.i] - v[pairs.j]


def pair_diff_adjoint(pairs: ComparablePairSet, u: np.ndarray) -> np.ndarray:
    """Apply the adjoint of the pairwise-difference operator.

    Scatters +u[k] to index i_k and -u[k] to index j_k, in O(|D|).
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (pairs.size,):
        raise ValueError(f"expected a vector of length {pairs.size}, got shape {u.shape}")
    return np.bincount(pairs.i, weights=u, minlength=pairs.n) - np.bincount(
        pairs.j, weights=u, minlength=pairs.n
    )


def load_survival_csv(path) -> SurvivalDataset:
    """Read a dataset from CSV with columns time, status, then features.

    Parsing is strict: every cell must be numeric, status must be 0 or 1 and
    times must be positive.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty file")
        header = [h.strip() for h in header]
        if len(header) < 2 or header[0] != "time" or header[1] != "status":
            raise ValueError(f"{path}: first two columns must be 'time' and 'status'")
        feature_names = tuple(header[2:])
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            parsed = []
            for name, cell in zip(header, row):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise ValueError(
                        f"{path}:{lineno}: non-numeric value {cell.strip()!r} in column {name!r}"
                    ) from None
            rows.append(parsed)
        if not rows:
            raise ValueError(f"{path}: no data rows")
    table = np.asarray(rows, dtype=float)
    y = table[:, 0]
    status = table[:, 1]
    if not np.isin(status, (0.0, 1.0)).all():
        raise ValueError(f"{path}: status column must contain only 0 or 1")
    return SurvivalDataset.from_times(y, status, table[:, 2:], feature_names)
