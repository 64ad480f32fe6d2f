"""Similarity transforms, closed-form fitting and error metrics.

Points are plain ``(3,)`` float arrays and point lists are ``(n, 3)``
arrays; a similarity transform maps ``p`` to ``s * R @ p + t``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSample

# Second singular value of the cross-covariance below this fraction of the
# first marks a rank-deficient (collinear or coincident) selection.
RANK_TOL = 1e-12


@dataclass(frozen=True)
class CorrespondenceSet:
    """Paired point lists; ``a[i]`` is matched to ``b[i]``."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if a.ndim != 2 or a.shape[1] != 3 or a.shape != b.shape:
            raise ValueError(f"expected two (n, 3) arrays, got {a.shape} and {b.shape}")
        if a.shape[0] < 3:
            raise ValueError(f"need at least 3 correspondences, got {a.shape[0]}")
        if not (np.isfinite(a).all() and np.isfinite(b).all()):
            raise ValueError("point coordinates must be finite")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    def __len__(self):
        return self.a.shape[0]

    @property
    def n(self) -> int:
        return self.a.shape[0]

    def subset(self, indices) -> "CorrespondenceSet":
        idx = np.asarray(indices, dtype=np.intp)
        return CorrespondenceSet(self.a[idx], self.b[idx])


@dataclass(frozen=True)
class SimilarityTransform:
    s: float
    R: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.R, dtype=float).reshape(3, 3)
        t = np.asarray(self.t, dtype=float).reshape(3)
        if not self.s > 0:
            raise ValueError(f"scale must be positive, got {self.s}")
        if not is_rotation(R):
            raise ValueError("R is not a proper rotation matrix")
        object.__setattr__(self, "s", float(self.s))
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "t", t)

    @classmethod
    def identity(cls) -> "SimilarityTransform":
        return cls(1.0, np.eye(3), np.zeros(3))

    def apply(self, points) -> np.ndarray:
        """Map a point ``(3,)`` or a point list ``(n, 3)``."""
        p = np.asarray(points, dtype=float)
        return self.s * p @ self.R.T + self.t

    def matrix(self) -> np.ndarray:
        """4x4 homogeneous form."""
        T = np.eye(4)
        T[:3, :3] = self.s * self.R
        T[:3, 3] = self.t
        return T


def apply(T: SimilarityTransform, p) -> np.ndarray:
    return T.apply(p)


def is_rotation(R, tol=1e-9) -> bool:
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.isfinite(R).all():
        return False
    return bool(np.abs(R.T @ R - np.eye(3)).max() <= tol and abs(np.linalg.det(R) - 1.0) <= tol)


def rot_x(deg):
    c, s = np.cos(np.radians(deg)), np.sin(np.radians(deg))
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(deg):
    c, s = np.cos(np.radians(deg)), np.sin(np.radians(deg))
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(deg):
    c, s = np.cos(np.radians(deg)), np.sin(np.radians(deg))
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def quaternion_to_matrix(q) -> np.ndarray:
    w, x, y, z = np.asarray(q, dtype=float) / np.linalg.norm(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Rotation drawn uniformly from SO(3) via a normalised Gaussian quaternion."""
    q = rng.standard_normal(4)
    while np.linalg.norm(q) < 1e-12:
        q = rng.standard_normal(4)
    return quaternion_to_matrix(q)


def _fit_batch(A, B, fixed_scale=None):
    """Least-squares similarity fit for a stack of point selections.

    ``A`` and ``B`` have shape ``(m, k, 3)``. Returns ``(s, R, t, ok)`` where
    ``ok`` flags the selections whose cross-covariance has rank >= 2.
    """
    ca = A.mean(axis=1)
    cb = B.mean(axis=1)
    Ac = A - ca[:, None, :]
    Bc = B - cb[:, None, :]
    H = np.einsum("mki,mkj->mij", Ac, Bc)
    U, S, Vt = np.linalg.svd(H)
    V = np.swapaxes(Vt, 1, 2)
    Ut = np.swapaxes(U, 1, 2)
    d = np.sign(np.linalg.det(V @ Ut))
    d[d == 0] = 1.0
    D = np.zeros_like(H)
    D[:, 0, 0] = 1.0
    D[:, 1, 1] = 1.0
    D[:, 2, 2] = d
    R = V @ D @ Ut
    ok = S[:, 1] > RANK_TOL * S[:, 0]
    if fixed_scale is None:
        # sum_i b'_i . (R a'_i) == trace(R H)
        num = np.einsum("mij,mji->m", R, H)
        den = np.einsum("mki,mki->m", Ac, Ac)
        with np.errstate(divide="ignore", invalid="ignore"):
            s = num / den
        ok &= np.isfinite(s) & (s > 0)
    else:
        s = np.full(A.shape[0], float(fixed_scale))
    t = cb - s[:, None] * np.einsum("mij,mj->mi", R, ca)
    return s, R, t, ok


def fit_similarity(corr: CorrespondenceSet, indices=None, fixed_scale=None) -> SimilarityTransform:
    """Closed-form minimiser of ``sum ||s R a_i + t - b_i||^2`` over ``indices``.

    The rotation comes from the SVD of the centred cross-covariance with a
    reflection correction. With ``fixed_scale`` the scale is not estimated.

    Raises
    ------
    DegenerateSample
        If the selected points are collinear or coincident.
    """
    if indices is None:
        indices = np.arange(corr.n)
    idx = np.asarray(indices, dtype=np.intp)
    if idx.size < 3:
        raise DegenerateSample(f"need at least 3 points, got {idx.size}")
    if fixed_scale is not None and not fixed_scale > 0:
        raise ValueError(f"fixed_scale must be positive, got {fixed_scale}")
    s, R, t, ok = _fit_batch(corr.a[idx][None], corr.b[idx][None], fixed_scale)
    if not ok[0]:
        raise DegenerateSample("selected points are collinear or coincident")
    return SimilarityTransform(s[0], R[0], t[0])


def fit_minimal_batch(corr: CorrespondenceSet, triplets, fixed_scale=None):
    """Fit one hypothesis per row of ``triplets`` (shape ``(m, 3)``).

    Returns arrays ``(s, R, t, ok)``; rows with ``ok == False`` are degenerate.
    """
    tri = np.asarray(triplets, dtype=np.intp)
    return _fit_batch(corr.a[tri], corr.b[tri], fixed_scale)


def residuals(T: SimilarityTransform, corr: CorrespondenceSet) -> np.ndarray:
    """Euclidean b-frame residual of every correspondence."""
    return np.linalg.norm(T.apply(corr.a) - corr.b, axis=1)


def residual(T: SimilarityTransform, corr: CorrespondenceSet, i: int) -> float:
    return float(np.linalg.norm(T.apply(corr.a[i]) - corr.b[i]))


def rotation_error_deg(R_est, R_gt) -> float:
    """Geodesic angle of ``R_est @ R_gt.T`` in degrees.

    Evaluated as ``atan2(sin, cos)`` of the relative rotation, which equals
    ``arccos((trace - 1) / 2)`` but keeps full precision near 0 and 180.
    """
    D = np.asarray(R_est, dtype=float) @ np.asarray(R_gt, dtype=float).T
    cos = np.clip((np.trace(D) - 1.0) / 2.0, -1.0, 1.0)
    sin = 0.5 * np.linalg.norm([D[2, 1] - D[1, 2], D[0, 2] - D[2, 0], D[1, 0] - D[0, 1]])
    return float(np.degrees(np.arctan2(sin, cos)))
