"""Robust similarity registration from putative correspondences.

Pipeline: log-ratio matrix, per-correspondence scale-consistency scores,
ranking, rank-sum ordered 3-point samples, triplet prescreen, minimal fit,
consensus, and a final refit on the largest consensus set. The stopping
test runs whenever the number of tested hypotheses reaches a multiple of
``batch``.

Hypotheses are evaluated in vectorised chunks, but the bookkeeping follows
the one-at-a-time loop exactly, so results do not depend on chunk sizes.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import geometry, sampler, scale
from .errors import DegenerateSample, InsufficientInliers
from .geometry import CorrespondenceSet, SimilarityTransform

log = logging.getLogger(__name__)

# Hypotheses fitted and scored per numpy call.
EVAL_CHUNK = 256
# Triplets pulled from the enumerator per block.
ENUM_BLOCK = 1 << 16


@dataclass
class SolverConfig:
    epsilon: float = 0.1
    inlier_threshold: float = 0.05
    batch: int = 1000
    min_inlier_floor: int = 9
    min_inlier_fraction: float = 0.009
    max_hypotheses: Optional[int] = None
    max_samples: Optional[int] = None
    time_budget: Optional[float] = None
    sampling_mode: str = "ordered"
    seed: int = 0

    def __post_init__(self):
        if not self.epsilon > 0 or not self.inlier_threshold > 0:
            raise ValueError("epsilon and inlier_threshold must be positive")
        if self.batch < 1:
            raise ValueError("batch must be >= 1")
        if not 0 < self.min_inlier_fraction < 1:
            raise ValueError("min_inlier_fraction must lie in (0, 1)")
        if self.sampling_mode not in ("ordered", "random"):
            raise ValueError(f"unknown sampling_mode {self.sampling_mode!r}")
        if self.max_hypotheses is not None and self.max_hypotheses < 1:
            raise ValueError("max_hypotheses must be >= 1")
        if self.max_samples is not None and self.max_samples < 1:
            raise ValueError("max_samples must be >= 1")
        if self.time_budget is not None and not self.time_budget > 0:
            raise ValueError("time_budget must be positive")

    def stop_threshold(self, n: int) -> float:
        return max(self.min_inlier_floor, self.min_inlier_fraction * n)


@dataclass
class RegistrationResult:
    transform: SimilarityTransform
    inliers: np.ndarray
    hypotheses_tested: int
    prescreen_rejections: int
    samples_drawn: int
    converged: bool
    elapsed: float
    best_found_at: int = 0
    ranking: Optional[scale.Ranking] = field(default=None, repr=False)


def consensus(T: SimilarityTransform, corr: CorrespondenceSet, inlier_threshold: float) -> np.ndarray:
    """Indices whose residual under ``T`` is at most ``inlier_threshold``."""
    return np.flatnonzero(geometry.residuals(T, corr) <= inlier_threshold)


def _consensus_counts(corr, s, R, t, ok, thr):
    """Consensus size of each hypothesis in a stack; degenerate ones score 0."""
    P = np.matmul(R, corr.a.T)
    P *= s[:, None, None]
    P += t[:, :, None]
    P -= corr.b.T
    np.square(P, out=P)
    counts = (P.sum(axis=1) <= thr * thr).sum(axis=1)
    counts[~ok] = 0
    return counts


class _Search:
    """Mutable state of one solver run."""

    def __init__(self, corr, cfg, fixed_scale):
        self.corr = corr
        self.cfg = cfg
        self.fixed_scale = fixed_scale
        self.threshold = cfg.stop_threshold(corr.n)
        self.best_count = 0
        self.best_hyp = None
        self.best_at = 0
        self.hypotheses = 0
        self.rejections = 0
        self.samples = 0
        self.converged = False
        self.stopped = False
        self.start = time.perf_counter()
        self.max_hypotheses = cfg.max_hypotheses

    def feed(self, triplets, passed):
        """Process candidate triplets in emission order.

        ``passed`` is the prescreen outcome per triplet. Stops early (and
        leaves the remainder unconsumed) when the search terminates.
        """
        cfg = self.cfg
        pos = 0
        m = len(triplets)
        while pos < m and not self.stopped:
            # Consume up to the next stopping-check boundary.
            room = cfg.batch - self.hypotheses % cfg.batch
            if self.max_hypotheses is not None:
                room = min(room, self.max_hypotheses - self.hypotheses)
            seg_pass = np.flatnonzero(passed[pos:])
            if cfg.max_samples is not None:
                seg_pass = seg_pass[seg_pass < cfg.max_samples - self.samples]
            take = seg_pass[:room]
            if take.size < room:
                # Not enough passing triplets to reach the boundary.
                end = m - pos
                if cfg.max_samples is not None:
                    end = min(end, cfg.max_samples - self.samples)
            else:
                end = int(take[-1]) + 1
            self.samples += end
            self.rejections += end - take.size
            self._evaluate(triplets[pos + take])
            pos += end
            self._check()
            if cfg.max_samples is not None and self.samples >= cfg.max_samples:
                self.stopped = True

    def _evaluate(self, tri):
        for c0 in range(0, len(tri), EVAL_CHUNK):
            chunk = tri[c0:c0 + EVAL_CHUNK]
            s, R, t, ok = geometry.fit_minimal_batch(self.corr, chunk, self.fixed_scale)
            counts = _consensus_counts(self.corr, s, R, t, ok, self.cfg.inlier_threshold)
            best = int(np.argmax(counts))
            if counts[best] > self.best_count:
                self.best_count = int(counts[best])
                self.best_hyp = SimilarityTransform(s[best], R[best], t[best])
                self.best_at = self.hypotheses + best + 1
            self.hypotheses += len(chunk)

    def _check(self):
        cfg = self.cfg
        if self.hypotheses > 0 and self.hypotheses % cfg.batch == 0:
            if self.best_count >= self.threshold:
                self.converged = True
                self.stopped = True
                return
            if cfg.time_budget is not None and time.perf_counter() - self.start > cfg.time_budget:
                self.stopped = True
        if self.max_hypotheses is not None and self.hypotheses >= self.max_hypotheses:
            self.stopped = True

    def finish(self, exhausted: bool, ranking=None) -> RegistrationResult:
        # Running out of samples acts as a final (partial) batch boundary.
        if exhausted and not self.converged and self.best_count >= self.threshold:
            self.converged = True
        if self.best_hyp is None or self.best_count < 3:
            raise InsufficientInliers(
                f"largest consensus has {self.best_count} correspondences after "
                f"{self.hypotheses} hypotheses")
        largest = consensus(self.best_hyp, self.corr, self.cfg.inlier_threshold)
        try:
            T = geometry.fit_similarity(self.corr, largest, self.fixed_scale)
        except DegenerateSample as exc:
            raise InsufficientInliers(f"consensus set is degenerate: {exc}") from exc
        return RegistrationResult(
            transform=T,
            # reported against the refit so every listed index fits T
            inliers=consensus(T, self.corr, self.cfg.inlier_threshold),
            hypotheses_tested=self.hypotheses,
            prescreen_rejections=self.rejections,
            samples_drawn=self.samples,
            converged=self.converged,
            elapsed=time.perf_counter() - self.start,
            best_found_at=self.best_at,
            ranking=ranking,
        )


def _prescreen(L, tri, ln_s, epsilon):
    i, j, k = tri[:, 0], tri[:, 1], tri[:, 2]
    if ln_s is None:
        return sampler.prescreen_unknown(L, i, j, k, epsilon)
    return sampler.prescreen_known(L, i, j, k, ln_s, epsilon)


def _run(corr: CorrespondenceSet, cfg: SolverConfig, fixed_scale=None) -> RegistrationResult:
    if corr.n < 3:
        raise ValueError("need at least 3 correspondences")
    search = _Search(corr, cfg, fixed_scale)
    L = scale.build_log_ratio(corr)
    if L.coincident:
        log.warning("%d correspondence pairs have coincident points", L.coincident)
    ln_s = None if fixed_scale is None else math.log(fixed_scale)

    if cfg.sampling_mode == "ordered":
        if ln_s is None:
            scores = scale.score_unknown(L, cfg.epsilon)
        else:
            scores = scale.score_known(L, ln_s, cfg.epsilon)
        ranking = scale.rank(scores)
        state = sampler.EnumeratorState(corr.n, ranking)
        while not search.stopped:
            ranks = state.next_block(ENUM_BLOCK)
            if ranks is None:
                break
            tri = state.indices(ranks)
            search.feed(tri, _prescreen(L, tri, ln_s, cfg.epsilon))
        exhausted = state.done and not search.stopped
        return search.finish(exhausted, ranking)

    rng = np.random.default_rng(cfg.seed)
    if cfg.max_samples is None:
        search.cfg = cfg = _with_sample_cap(cfg, corr.n)
    while not search.stopped:
        tri = sampler.random_triplets(rng, corr.n, ENUM_BLOCK // 4)
        search.feed(tri, _prescreen(L, tri, ln_s, cfg.epsilon))
    return search.finish(exhausted=search.samples >= cfg.max_samples and not search.converged)


def _with_sample_cap(cfg, n):
    return replace(cfg, max_samples=max(1, n * (n - 1) * (n - 2) // 6))


def register_unknown_scale(corr: CorrespondenceSet, cfg: SolverConfig | None = None) -> RegistrationResult:
    """Estimate scale, rotation and translation from outlier-laden correspondences.

    Raises
    ------
    InsufficientInliers
        If no hypothesis gathers at least three inliers.
    """
    return _run(corr, cfg or SolverConfig())


def register_known_scale(corr: CorrespondenceSet, s: float, cfg: SolverConfig | None = None) -> RegistrationResult:
    """Rotation and translation with the scale fixed to ``s``."""
    if not s > 0:
        raise ValueError(f"scale must be positive, got {s}")
    return _run(corr, cfg or SolverConfig(), fixed_scale=float(s))


def register_random_baseline(corr: CorrespondenceSet, cfg: SolverConfig | None = None,
                             s: float | None = None) -> RegistrationResult:
    """Same pipeline with uniformly random 3-point samples instead of ranked ones."""
    cfg = replace(cfg or SolverConfig(), sampling_mode="random")
    if s is None:
        return register_unknown_scale(corr, cfg)
    return register_known_scale(corr, s, cfg)


def register(corr: CorrespondenceSet, cfg: SolverConfig | None = None, s: float | None = None) -> RegistrationResult:
    """Dispatch on ``s``: known-scale when given, unknown-scale otherwise."""
    if s is None:
        return register_unknown_scale(corr, cfg)
    return register_known_scale(corr, s, cfg)
