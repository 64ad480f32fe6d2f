"""Synthetic outlier-contaminated scenes and Monte-Carlo evaluation."""
from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import geometry, solver
from .errors import BadSpec, RegistrationError
from .geometry import CorrespondenceSet, SimilarityTransform

CSV_HEADER = ["ratio", "seed", "rot_err_deg", "trans_err", "scale_err_rel",
              "elapsed_s", "hypotheses", "converged"]

# Error values recorded when the solver raises instead of returning.
FAILED_ROT_ERR = 180.0
FAILED_ERR = 1e9

DEFAULT_RATIOS = (0.90, 0.95, 0.96, 0.97, 0.98, 0.99)


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class SceneSpec:
    n: int = 1000
    outlier_ratio: float = 0.0
    noise_sigma: float = 0.01
    scale_range: tuple = (1.0, 5.0)
    translation_range: float = 1.0
    seed: int = 0
    points: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    @property
    def n_outliers(self) -> int:
        return round_half_up(self.outlier_ratio * self.n)

    @property
    def n_inliers(self) -> int:
        return self.n - self.n_outliers

    @property
    def known_scale(self) -> bool:
        return self.scale_range[0] == self.scale_range[1]

    def validate(self):
        if not 0.0 <= self.outlier_ratio <= 0.99:
            raise BadSpec(f"outlier_ratio must lie in [0, 0.99], got {self.outlier_ratio}")
        if self.n_inliers < 3:
            raise BadSpec(f"n={self.n} at outlier_ratio={self.outlier_ratio} leaves "
                          f"{self.n_inliers} inliers (need >= 3)")
        if self.noise_sigma < 0:
            raise BadSpec("noise_sigma must be nonnegative")
        lo, hi = self.scale_range
        if not 0 < lo <= hi:
            raise BadSpec(f"invalid scale_range {self.scale_range}")
        if self.points is not None and len(self.points) < self.n:
            raise BadSpec(f"point source has {len(self.points)} points, need {self.n}")


@dataclass(frozen=True)
class GroundTruth:
    transform: SimilarityTransform
    inlier_mask: np.ndarray

    @property
    def inliers(self) -> np.ndarray:
        return np.flatnonzero(self.inlier_mask)


def fit_unit_cube(points) -> np.ndarray:
    """Translate and uniformly rescale so the cloud fits inside [0, 1]^3."""
    p = np.asarray(points, dtype=float)
    lo = p.min(axis=0)
    extent = float((p.max(axis=0) - lo).max())
    if extent == 0:
        raise BadSpec("point source has zero extent")
    return (p - lo) / extent


def uniform_ball(rng, m, radius):
    d = rng.standard_normal((m, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    r = radius * rng.random(m) ** (1.0 / 3.0)
    return d * r[:, None]


def generate_scene(spec: SceneSpec):
    """Return ``(CorrespondenceSet, GroundTruth)`` fully determined by ``spec.seed``.

    Outliers replace the b-side point with a uniform sample inside a ball of
    diameter ``sqrt(3) * s`` centred on the transformed cloud's centroid.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n = spec.n
    if spec.points is None:
        a = rng.random((n, 3))
    else:
        src = np.asarray(spec.points, dtype=float)
        pick = np.sort(rng.choice(len(src), size=n, replace=False)) if len(src) > n else np.arange(n)
        a = fit_unit_cube(src[pick])

    lo, hi = spec.scale_range
    s = lo if lo == hi else float(rng.uniform(lo, hi))
    R = geometry.random_rotation(rng)
    t = rng.uniform(-spec.translation_range, spec.translation_range, size=3)
    T = SimilarityTransform(s, R, t)

    clean = T.apply(a)
    b = clean + spec.noise_sigma * rng.standard_normal((n, 3))
    outliers = rng.choice(n, size=spec.n_outliers, replace=False)
    centre = clean.mean(axis=0)
    b[outliers] = centre + uniform_ball(rng, outliers.size, math.sqrt(3.0) * s / 2.0)

    mask = np.ones(n, dtype=bool)
    mask[outliers] = False
    return CorrespondenceSet(a, b), GroundTruth(T, mask)


@dataclass(frozen=True)
class TrialRecord:
    ratio: float
    seed: int
    rot_err_deg: float
    trans_err: float
    scale_err_rel: float
    elapsed_s: float
    hypotheses: int
    converged: bool


def trial_seed(base_seed: int, ratio_index: int, trial_index: int) -> int:
    ss = np.random.SeedSequence([int(base_seed), int(ratio_index), int(trial_index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def run_trial(spec: SceneSpec, cfg: solver.SolverConfig, known_scale: bool) -> TrialRecord:
    corr, gt = generate_scene(spec)
    cfg = replace(cfg, seed=spec.seed)
    start = time.perf_counter()
    try:
        res = solver.register(corr, cfg, s=gt.transform.s if known_scale else None)
    except RegistrationError:
        return TrialRecord(spec.outlier_ratio, spec.seed, FAILED_ROT_ERR, FAILED_ERR, FAILED_ERR,
                           time.perf_counter() - start, 0, False)
    T, G = res.transform, gt.transform
    return TrialRecord(
        ratio=spec.outlier_ratio,
        seed=spec.seed,
        rot_err_deg=geometry.rotation_error_deg(T.R, G.R),
        trans_err=float(np.linalg.norm(T.t - G.t)),
        scale_err_rel=abs(T.s - G.s) / G.s,
        elapsed_s=time.perf_counter() - start,
        hypotheses=res.hypotheses_tested,
        converged=res.converged,
    )


def _run_one(args):
    return run_trial(*args)


def run_trials(template: SceneSpec, outlier_ratios: Sequence[float], trials_per_ratio: int,
               cfg: solver.SolverConfig | None = None, known_scale: bool = False,
               base_seed: int = 0, jobs: int = 1, progress=None) -> list[TrialRecord]:
    """One record per (ratio, trial), ordered by ratio then trial.

    Each trial's seed depends only on ``(base_seed, ratio index, trial
    index)``, so records do not depend on ``jobs`` or on the trial count.
    """
    cfg = cfg or solver.SolverConfig()
    tasks = []
    for ri, ratio in enumerate(outlier_ratios):
        for k in range(trials_per_ratio):
            spec = replace(template, outlier_ratio=float(ratio), seed=trial_seed(base_seed, ri, k))
            spec.validate()
            tasks.append((spec, cfg, known_scale))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_one, tasks, chunksize=1))
    else:
        records = []
        for task in tasks:
            records.append(_run_one(task))
            if progress is not None:
                progress(records[-1])
    return records


def lower_median(values):
    v = sorted(values)
    if not v:
        return float("nan")
    return v[(len(v) - 1) // 2]


@dataclass(frozen=True)
class RatioSummary:
    ratio: float
    trials: int
    fail_5deg: int
    fail_10deg: int
    median_rot_err: float
    mean_rot_err: float
    median_elapsed: float
    median_hypotheses: int
    converged: int


def aggregate(records: Sequence[TrialRecord]) -> list[RatioSummary]:
    """Per-ratio failure counts and medians (lower median for even counts)."""
    if not records:
        raise ValueError("no records to aggregate")
    out = []
    for ratio in sorted({r.ratio for r in records}):
        group = [r for r in records if r.ratio == ratio]
        rot = [r.rot_err_deg for r in group]
        out.append(RatioSummary(
            ratio=ratio,
            trials=len(group),
            fail_5deg=sum(e > 5.0 for e in rot),
            fail_10deg=sum(e > 10.0 for e in rot),
            median_rot_err=lower_median(rot),
            mean_rot_err=math.fsum(sorted(rot)) / len(rot),
            median_elapsed=lower_median([r.elapsed_s for r in group]),
            median_hypotheses=lower_median([r.hypotheses for r in group]),
            converged=sum(r.converged for r in group),
        ))
    return out


def _fmt(x: float) -> str:
    return repr(float(x))


def records_to_csv(records: Sequence[TrialRecord], timing: bool = True) -> str:
    """Serialise records; with ``timing=False`` the elapsed column is left
    empty so the output is reproducible byte for byte."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in sorted(records, key=lambda r: r.ratio):
        w.writerow([_fmt(r.ratio), r.seed, _fmt(r.rot_err_deg), _fmt(r.trans_err),
                    _fmt(r.scale_err_rel), _fmt(r.elapsed_s) if timing else "",
                    r.hypotheses, int(r.converged)])
    return buf.getvalue()


def write_records_csv(path, records, timing: bool = True):
    Path(path).write_text(records_to_csv(records, timing), encoding="utf-8")


def read_records_csv(path) -> list[TrialRecord]:
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    return [TrialRecord(float(r["ratio"]), int(r["seed"]), float(r["rot_err_deg"]),
                        float(r["trans_err"]), float(r["scale_err_rel"]),
                        float(r["elapsed_s"]) if r["elapsed_s"] else float("nan"),
                        int(r["hypotheses"]), bool(int(r["converged"])))
            for r in rows]


def summary_to_csv(summary: Sequence[RatioSummary]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    fields = list(asdict(summary[0]).keys()) if summary else []
    w.writerow(fields)
    for row in summary:
        w.writerow([_fmt(v) if isinstance(v, float) else v for v in asdict(row).values()])
    return buf.getvalue()


def format_table(summary: Sequence[RatioSummary], timing: bool = True) -> str:
    """Failure-count table, one line per outlier ratio plus a total."""
    lines = [f"{'ratio':>6}  {'R err > 5 deg':>16}  {'R err > 10 deg':>16}  "
             f"{'median R err':>12}  {'median hyp':>10}  {'median s':>9}"]
    for r in summary:
        t = f"{r.median_elapsed:9.3f}" if timing and not math.isnan(r.median_elapsed) else f"{'-':>9}"
        lines.append(f"{r.ratio:>6.2f}  {f'{r.fail_5deg} out of {r.trials}':>16}  "
                     f"{f'{r.fail_10deg} out of {r.trials}':>16}  {r.median_rot_err:12.4f}  "
                     f"{r.median_hypotheses:>10}  {t}")
    total = sum(r.trials for r in summary)
    lines.append(f"{'all':>6}  {f'{sum(r.fail_5deg for r in summary)} out of {total}':>16}  "
                 f"{f'{sum(r.fail_10deg for r in summary)} out of {total}':>16}")
    return "\n".join(lines)
