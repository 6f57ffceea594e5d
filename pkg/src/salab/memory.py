"""Memory matrices and PCA.

A memory matrix stores K patterns of dimension d as columns, together
with the two spectral constants every other module needs: the maximum
column norm M and the largest singular value. Instances are immutable
(arrays are write-protected) and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class MemoryMatrix:
    """d x K column store of patterns plus cached spectral constants."""

    columns: np.ndarray  # (d, K)
    max_norm: float      # M = max_k ||m_k||
    sigma_max: float     # largest singular value

    @property
    def d(self) -> int:
        return self.columns.shape[0]

    @property
    def K(self) -> int:
        return self.columns.shape[1]


def memory_from_columns(columns: np.ndarray) -> MemoryMatrix:
    """Wrap columns as-is (no normalization); used for projected memories."""
    columns = np.asarray(columns, dtype=np.float64)
    if columns.ndim != 2 or columns.shape[0] < 1 or columns.shape[1] < 1:
        raise ValueError("memory matrix must be 2-D with d >= 1 and K >= 1")
    if not np.all(np.isfinite(columns)):
        raise ValueError("memory matrix has non-finite entries")
    norms = np.linalg.norm(columns, axis=0)
    sigma = float(np.linalg.svd(columns, compute_uv=False)[0])
    return MemoryMatrix(_frozen(columns), float(norms.max()), sigma)


def normalize_columns(raw: np.ndarray, center: bool = False) -> MemoryMatrix:
    """Unit-normalize each column, optionally centering it first.

    Centering is the per-column zero-mean convention used for return
    matrices; image and sequence memories are normalized uncentered.
    """
    x = np.array(raw, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    if not np.all(np.isfinite(x)):
        raise ValueError("memory matrix has non-finite entries")
    if center:
        x = x - x.mean(axis=0, keepdims=True)
    norms = np.linalg.norm(x, axis=0)
    bad = np.nonzero(norms == 0.0)[0]
    if bad.size:
        raise ValueError("degenerate pattern: column %d has zero norm" % int(bad[0]))
    x /= norms
    return memory_from_columns(x)


def make_random_sphere_memory(d: int, K: int, seed: int) -> MemoryMatrix:
    """K iid uniform draws from the unit sphere in R^d, as columns."""
    if d < 1 or K < 1:
        raise ValueError("d and K must be >= 1")
    g = rng.normals(rng.derive(seed, rng.SPHERE), d * K)
    cols = g.reshape(d, K, order="F")
    return normalize_columns(cols, center=False)


@dataclass(frozen=True)
class PcaModel:
    """Rank-p PCA: mean, orthonormal directions, and spectrum summary.

    variance_fractions[j-1] is the fraction of total variance captured
    by the first j directions; it is cumulative over the full numerical
    rank of the (optionally centered) matrix, not just the retained p.
    """

    mean: np.ndarray                # (d,)
    directions: np.ndarray          # (d, p), orthonormal columns
    singular_values: np.ndarray     # (p,), nonincreasing
    variance_fractions: np.ndarray  # (p,), cumulative
    total_variance: float           # sum of squared singular values over rank

    @property
    def rank(self) -> int:
        return self.directions.shape[1]


def fit_pca(raw: np.ndarray,
            variance_target: float | None = None,
            fixed_rank: int | None = None,
            center: bool = True) -> PcaModel:
    """Economy SVD of the (optionally centered) matrix.

    Retains the smallest p with variance fraction >= variance_target,
    or the requested fixed rank capped at the numerical rank. Exactly
    one of the two selectors must be given. center=False keeps the raw
    second-moment directions (used by the PCA-subspace samplers, where
    all min(d, K) directions are live).
    """
    x = np.asarray(raw, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    d, K = x.shape
    if K < 2:
        raise ValueError("PCA needs at least 2 columns")
    if (variance_target is None) == (fixed_rank is None):
        raise ValueError("give exactly one of variance_target or fixed_rank")
    if variance_target is not None and not (0.0 < variance_target <= 1.0):
        raise ValueError("variance_target must be in (0, 1]")

    mean = x.mean(axis=1) if center else np.zeros(d)
    xc = x - mean[:, None]
    u, s, _ = np.linalg.svd(xc, full_matrices=False)

    tol = s[0] * max(d, K) * np.finfo(np.float64).eps if s.size and s[0] > 0 else 0.0
    r = int(np.sum(s > tol))
    if r == 0:
        raise ValueError("matrix is zero after centering; PCA undefined")
    s = s[:r]
    total = float(np.sum(s ** 2))
    frac = np.cumsum(s ** 2) / total

    if variance_target is not None:
        p = int(np.searchsorted(frac, variance_target - 1e-12) + 1)
        p = min(p, r)
    else:
        if fixed_rank < 1:
            raise ValueError("fixed_rank must be >= 1")
        p = min(int(fixed_rank), r)

    up = u[:, :p].copy()
    # sign convention: orient each direction so its largest-|.| entry is positive
    for j in range(p):
        i = int(np.argmax(np.abs(up[:, j])))
        if up[i, j] < 0:
            up[:, j] = -up[:, j]

    return PcaModel(_frozen(mean), _frozen(up), _frozen(s[:p]),
                    _frozen(frac[:p]), total)


def pca_project(model: PcaModel, x: np.ndarray) -> np.ndarray:
    """Coordinates of x (vector or d x n matrix) in the retained directions."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != model.mean.shape[0]:
        raise ValueError("dimension mismatch: expected %d, got %d"
                         % (model.mean.shape[0], x.shape[0]))
    if x.ndim == 1:
        return model.directions.T @ (x - model.mean)
    return model.directions.T @ (x - model.mean[:, None])


def pca_reconstruct(model: PcaModel, z: np.ndarray) -> np.ndarray:
    """Map coordinates back: mean + U_p z."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape[0] != model.rank:
        raise ValueError("dimension mismatch: expected %d, got %d"
                         % (model.rank, z.shape[0]))
    if z.ndim == 1:
        return model.mean + model.directions @ z
    return model.mean[:, None] + model.directions @ z


def reconstruction_error(model: PcaModel, raw: np.ndarray) -> float:
    """Mean squared reconstruction error of the columns of raw."""
    x = np.asarray(raw, dtype=np.float64)
    z = pca_project(model, x)
    back = pca_reconstruct(model, z)
    return float(np.sum((x - back) ** 2) / x.shape[1])
