"""Pairwise scale consistency: log-ratio matrix, scores and ranking."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyRow

DEFAULT_EPSILON = 0.1
GRID_STEP = 0.1

# Stored for pairs with a zero distance on either side; every
# epsilon-comparison against it fails.
SENTINEL = np.inf


@dataclass(frozen=True)
class LogRatioMatrix:
    """Symmetric ``(n, n)`` matrix of ``ln(|b_i - b_j| / |a_i - a_j|)``.

    The diagonal is zero and never read. ``coincident`` counts the unordered
    pairs that were replaced by the sentinel.
    """

    entries: np.ndarray
    coincident: int = 0

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __getitem__(self, key):
        return self.entries[key]

    def row(self, i: int) -> np.ndarray:
        """Off-diagonal entries of row ``i`` in index order."""
        r = self.entries[i]
        return np.concatenate([r[:i], r[i + 1:]])


@dataclass(frozen=True)
class CandidateGrid:
    values: np.ndarray
    p: float
    q: float
    step: float


@dataclass(frozen=True)
class Ranking:
    """Scores plus the descending order; ``rank_of[i]`` is 1-based."""

    scores: np.ndarray
    order: np.ndarray
    rank_of: np.ndarray

    def index_of_rank(self, r):
        return self.order[np.asarray(r) - 1]


def _pair_distances(x: np.ndarray) -> np.ndarray:
    diff = x[:, None, :] - x[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def build_log_ratio(corr) -> LogRatioMatrix:
    n = corr.n
    iu, ju = np.triu_indices(n, k=1)
    da = _pair_distances(corr.a)[iu, ju]
    db = _pair_distances(corr.b)[iu, ju]
    bad = (da == 0) | (db == 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        upper = np.log(db / da)
    upper[bad] = SENTINEL
    L = np.zeros((n, n))
    L[iu, ju] = upper
    L[ju, iu] = upper
    return LogRatioMatrix(L, int(bad.sum()))


def nearest_integer(x: float) -> int:
    """Round half away from zero."""
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def grid_from_row(row: np.ndarray, step: float = GRID_STEP) -> CandidateGrid:
    """Candidate ``ln s`` values spanning the finite entries of ``row``."""
    finite = row[np.isfinite(row)]
    if finite.size == 0:
        raise EmptyRow("row has no finite entry")
    p = float(finite.min())
    q = float(finite.max())
    if q == p:
        return CandidateGrid(np.array([p]), p, q, 0.0)
    m = max(1, nearest_integer((q - p) / step))
    delta = (q - p) / m
    values = p + delta * np.arange(m + 1)
    values[-1] = q
    return CandidateGrid(values, p, q, delta)


def candidate_grid(L: LogRatioMatrix, i: int, step: float = GRID_STEP) -> CandidateGrid:
    return grid_from_row(L.row(i), step)


def _truncated_cost(row: np.ndarray, grid: np.ndarray, epsilon: float) -> np.ndarray:
    # Sentinel entries give |inf - g| = inf, truncated to epsilon.
    cost = np.abs(row[None, :] - grid[:, None])
    np.minimum(cost, epsilon, out=cost)
    return cost.sum(axis=1)


def score_known(L: LogRatioMatrix, ln_s: float, epsilon: float = DEFAULT_EPSILON) -> np.ndarray:
    """``S(i) = -sum_{j != i} min(|L(i, j) - ln s|, epsilon)``."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    cost = np.minimum(np.abs(L.entries - ln_s), epsilon)
    np.fill_diagonal(cost, 0.0)
    return -cost.sum(axis=1)


def score_unknown(L: LogRatioMatrix, epsilon: float = DEFAULT_EPSILON,
                  step: float = GRID_STEP) -> np.ndarray:
    """Per-row maximum of the known-scale score over the candidate grid."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    n = L.n
    scores = np.empty(n)
    for i in range(n):
        row = L.row(i)
        try:
            grid = grid_from_row(row, step)
        except EmptyRow:
            scores[i] = -(n - 1) * epsilon
            continue
        scores[i] = -_truncated_cost(row, grid.values, epsilon).min()
    return scores


def rank(scores) -> Ranking:
    """Descending sort; equal scores keep ascending index order."""
    scores = np.asarray(scores, dtype=float)
    order = np.argsort(-scores, kind="stable")
    rank_of = np.empty(scores.size, dtype=np.intp)
    rank_of[order] = np.arange(1, scores.size + 1)
    return Ranking(scores, order, rank_of)
