"""Rank-sum ordered enumeration of 3-point samples and triplet prescreens.

Triplets of ranking numbers ``r_i < r_j < r_k`` are visited with ascending
``r_sum = r_i + r_j + r_k``; within one sum, ``r_i`` then ``r_j`` ascend.
For a fixed sum the admissible ranges are::

    max(1, r_sum - 2n + 1)       <= r_i <= floor((r_sum - 3) / 3)
    max(r_i + 1, r_sum - r_i - n) <= r_j <= floor((r_sum - r_i - 1) / 2)

and ``r_k`` follows from the sum. Every triplet is produced exactly once
without any visited set.
"""
from __future__ import annotations

from typing import NamedTuple, Optional

import numpy as np

from .errors import CoincidentPoints


class RankTriplet(NamedTuple):
    r_i: int
    r_j: int
    r_k: int
    i: int
    j: int
    k: int

    @property
    def r_sum(self) -> int:
        return self.r_i + self.r_j + self.r_k


def r_i_bounds(r_sum: int, n: int) -> tuple[int, int]:
    return max(1, r_sum - 2 * n + 1), (r_sum - 3) // 3


def r_j_bounds(r_sum: int, r_i: int, n: int) -> tuple[int, int]:
    return max(r_i + 1, r_sum - r_i - n), (r_sum - r_i - 1) // 2


class EnumeratorState:
    """Resumable cursor over all ``C(n, 3)`` rank triplets.

    ``ranking`` maps ranks back to correspondence indices through its
    ``order`` array; without one, index ``r - 1`` is used for rank ``r``.
    """

    def __init__(self, n: int, ranking=None):
        self.n = int(n)
        self.order = (np.arange(self.n) if ranking is None
                      else np.asarray(ranking.order, dtype=np.intp))
        if self.order.size != self.n:
            raise ValueError("ranking size does not match n")
        self.r_sum = 6
        self.r_i: Optional[int] = None
        self.r_j: Optional[int] = None
        self.emitted = 0
        self.done = False
        self._settle()

    @property
    def total(self) -> int:
        n = self.n
        return n * (n - 1) * (n - 2) // 6 if n >= 3 else 0

    def _settle(self):
        """Move the cursor onto the next admissible triplet, or finish."""
        n = self.n
        while self.r_sum <= 3 * n - 3:
            lo, hi = r_i_bounds(self.r_sum, n)
            if self.r_i is None:
                self.r_i = lo
            while self.r_i <= hi:
                jl, ju = r_j_bounds(self.r_sum, self.r_i, n)
                if self.r_j is None:
                    self.r_j = jl
                if self.r_j <= ju:
                    return
                self.r_i += 1
                self.r_j = None
            self.r_sum += 1
            self.r_i = None
        self.done = True

    def __iter__(self):
        return self

    def __next__(self) -> RankTriplet:
        t = next_triplet(self)
        if t is None:
            raise StopIteration
        return t

    def next_block(self, max_rows: int = 65536) -> Optional[np.ndarray]:
        """Emit the next run of triplets as an ``(m, 3)`` rank array.

        The run follows the canonical order and ends on an ``r_i`` row
        boundary; it holds at most ``max_rows`` triplets unless a single row
        is longer. Returns None when exhausted.
        """
        if self.done:
            return None
        n = self.n
        parts = []
        budget = max_rows
        while not self.done and budget > 0:
            S = self.r_sum
            _, hi = r_i_bounds(S, n)
            ri = np.arange(self.r_i, hi + 1)
            jl = np.maximum(ri + 1, S - ri - n)
            jl[0] = max(jl[0], self.r_j)
            ju = (S - ri - 1) // 2
            counts = np.maximum(ju - jl + 1, 0)
            cum = np.cumsum(counts)
            rows = max(1, int(np.searchsorted(cum, budget, side="right")))
            rows = min(rows, ri.size)
            ri, jl, counts = ri[:rows], jl[:rows], counts[:rows]
            total = int(cum[rows - 1])
            starts = np.repeat(cum[:rows] - counts, counts)
            r_i = np.repeat(ri, counts)
            r_j = np.repeat(jl, counts) + np.arange(total) - starts
            parts.append(np.stack([r_i, r_j, S - r_i - r_j], axis=1))
            budget -= total
            self.emitted += total
            if rows == ri.size and int(ri[-1]) == hi:
                self.r_sum += 1
                self.r_i = None
            else:
                self.r_i = int(ri[-1]) + 1
            self.r_j = None
            self._settle()
        return np.concatenate(parts) if parts else None

    def indices(self, ranks: np.ndarray) -> np.ndarray:
        """Correspondence indices for an array of 1-based ranks."""
        return self.order[np.asarray(ranks) - 1]


def next_triplet(state: EnumeratorState) -> Optional[RankTriplet]:
    """Emit the triplet under the cursor and advance; None when exhausted."""
    if state.done:
        return None
    r_i, r_j = state.r_i, state.r_j
    r_k = state.r_sum - r_i - r_j
    o = state.order
    out = RankTriplet(r_i, r_j, r_k, int(o[r_i - 1]), int(o[r_j - 1]), int(o[r_k - 1]))
    state.emitted += 1
    state.r_j += 1
    state._settle()
    return out


def enumerate_triplets(n: int, ranking=None):
    """Iterate over all rank triplets in canonical order."""
    return EnumeratorState(n, ranking)


def random_triplets(rng: np.random.Generator, n: int, m: int) -> np.ndarray:
    """``m`` uniformly drawn index triplets with distinct members.

    Repeats across rows are allowed.
    """
    out = np.empty((0, 3), dtype=np.intp)
    while out.shape[0] < m:
        draw = rng.integers(0, n, size=(m - out.shape[0], 3))
        keep = (draw[:, 0] != draw[:, 1]) & (draw[:, 1] != draw[:, 2]) & (draw[:, 0] != draw[:, 2])
        out = np.concatenate([out, draw[keep]])
    return out


def prescreen_unknown(L, i, j, k, epsilon: float = 0.1):
    """Triplet scale consistency: the three log ratios agree within epsilon.

    Accepts scalar or array indices. Sentinel entries always fail.
    """
    E = L.entries if hasattr(L, "entries") else L
    lij, ljk, lki = E[i, j], E[j, k], E[k, i]
    with np.errstate(invalid="ignore"):
        return ((np.abs(lij - ljk) < epsilon)
                & (np.abs(ljk - lki) < epsilon)
                & (np.abs(lij - lki) < epsilon))


def prescreen_known(L, i, j, k, ln_s: float, epsilon: float = 0.1):
    """Each of the three log ratios lies within epsilon of ``ln_s``."""
    E = L.entries if hasattr(L, "entries") else L
    return ((np.abs(E[i, j] - ln_s) < epsilon)
            & (np.abs(E[j, k] - ln_s) < epsilon)
            & (np.abs(E[k, i] - ln_s) < epsilon))


def prescreen_oracle_ratio(corr, i: int, j: int, k: int, delta: float) -> bool:
    """Twelve distance-ratio tests for similar triangles (reference check)."""
    a, b = corr.a, corr.b
    aij = np.linalg.norm(a[i] - a[j])
    ajk = np.linalg.norm(a[j] - a[k])
    aki = np.linalg.norm(a[k] - a[i])
    bij = np.linalg.norm(b[i] - b[j])
    bjk = np.linalg.norm(b[j] - b[k])
    bki = np.linalg.norm(b[k] - b[i])
    if min(aij, ajk, aki, bij, bjk, bki) == 0:
        raise CoincidentPoints(f"zero distance within triplet ({i}, {j}, {k})")
    pairs = [
        (aij / bij, ajk / bjk), (ajk / bjk, aki / bki), (aij / bij, aki / bki),
        (bij / aij, bjk / ajk), (bjk / ajk, bki / aki), (bij / aij, bki / aki),
        (aij / ajk, bij / bjk), (ajk / aki, bjk / bki), (aij / aki, bij / bki),
        (ajk / aij, bjk / bij), (aki / ajk, bki / bjk), (aki / aij, bki / bij),
    ]
    return all(abs(x - y) < delta for x, y in pairs)
