"""Plain-text file formats: correspondences, point lists, results."""
from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np

from .errors import ParseError
from .geometry import CorrespondenceSet, SimilarityTransform

_SPLIT = re.compile(r"[,\s]+")


def _rows(path, width):
    rows = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            fields = [x for x in _SPLIT.split(text) if x]
            if len(fields) != width:
                raise ParseError(f"expected {width} values, found {len(fields)}", lineno)
            try:
                vals = [float(x) for x in fields]
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
            if not all(np.isfinite(vals)):
                raise ParseError("non-finite coordinate", lineno)
            rows.append(vals)
    return np.array(rows, dtype=float).reshape(-1, width)


def read_correspondences(path) -> CorrespondenceSet:
    """Read ``ax,ay,az,bx,by,bz`` rows; ``#`` starts a comment line."""
    data = _rows(path, 6)
    if data.shape[0] < 3:
        raise ParseError(f"need at least 3 correspondences, found {data.shape[0]}")
    return CorrespondenceSet(data[:, :3], data[:, 3:])


def write_correspondences(path, corr: CorrespondenceSet, header: str | None = None):
    lines = []
    if header:
        lines += [f"# {h}" for h in header.splitlines()]
    lines.append("# ax,ay,az,bx,by,bz")
    for a, b in zip(corr.a, corr.b):
        lines.append(",".join(repr(float(v)) for v in (*a, *b)))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_points(path) -> np.ndarray:
    """Read ``x y z`` rows separated by whitespace or commas."""
    data = _rows(path, 3)
    if data.shape[0] == 0:
        raise ParseError("no points found")
    return data


def transform_to_dict(T: SimilarityTransform) -> dict:
    return {"s": float(T.s), "R": [float(v) for v in T.R.ravel()], "t": [float(v) for v in T.t]}


def transform_from_dict(d: dict) -> SimilarityTransform:
    return SimilarityTransform(d["s"], np.reshape(d["R"], (3, 3)), d["t"])


def result_to_dict(res) -> dict:
    out = transform_to_dict(res.transform)
    out.update(
        inliers=[int(i) for i in res.inliers],
        hypotheses_tested=res.hypotheses_tested,
        prescreen_rejections=res.prescreen_rejections,
        samples_drawn=res.samples_drawn,
        best_found_at=res.best_found_at,
        converged=res.converged,
    )
    return out


def write_json(path, payload: dict):
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def read_json(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def ground_truth_to_dict(gt) -> dict:
    out = transform_to_dict(gt.transform)
    out["inliers"] = [int(i) for i in gt.inliers]
    out["inlier_mask"] = [int(m) for m in gt.inlier_mask]
    return out
