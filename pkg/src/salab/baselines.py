"""Training-free comparison generators.

All baselines operate on the same memory matrix as the sampler, take a
seed, and return a SampleSet of exactly S rows. Sample rows are grouped
into pseudo-chains of 5 so the table aggregation treats baseline output
like the 30x5 multi-chain protocol.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng
from .memory import MemoryMatrix, PcaModel, fit_pca, pca_reconstruct
from .sampler import SampleSet

_GROUP = 5  # samples per pseudo-chain in baseline SampleSets


def _sample_set(samples: np.ndarray, origin: str) -> SampleSet:
    s = samples.shape[0]
    return SampleSet(samples, np.arange(s) // _GROUP, np.arange(s),
                     config=None, origin=origin)


def bootstrap_samples(mem: MemoryMatrix, count: int, seed: int) -> SampleSet:
    """Stored patterns drawn uniformly at random, verbatim."""
    s = rng.Stream(rng.derive(seed, rng.BOOTSTRAP))
    picks = s.integers_below(mem.K, count)
    return _sample_set(mem.columns[:, picks].T.copy(), "bootstrap")


def gaussian_perturb_samples(mem: MemoryMatrix, count: int, alpha: float,
                             beta: float, seed: int) -> SampleSet:
    """Random stored pattern plus isotropic noise at the sampler's
    per-step scale sigma = sqrt(2 alpha / beta)."""
    if alpha <= 0 or beta <= 0:
        raise ValueError("alpha and beta must be positive")
    s = rng.Stream(rng.derive(seed, rng.PERTURB))
    picks = s.integers_below(mem.K, count)
    sigma = np.sqrt(2.0 * alpha / beta)
    noise = s.normals(count * mem.d).reshape(count, mem.d)
    return _sample_set(mem.columns[:, picks].T + sigma * noise, "gaussian-perturb")


def convex_combination_samples(mem: MemoryMatrix, count: int, seed: int) -> SampleSet:
    """X w with w ~ Dirichlet(1,...,1), via normalized exponentials."""
    s = rng.Stream(rng.derive(seed, rng.CONVEX))
    u = s.uniforms(count * mem.K).reshape(count, mem.K)
    e = -np.log1p(-u)  # unit-rate exponentials
    w = e / e.sum(axis=1, keepdims=True)
    return _sample_set(w @ mem.columns.T, "convex-combination")


# ---------------------------------------------------------------------------
# GMM on PCA codes

@dataclass(frozen=True)
class GmmModel:
    weights: np.ndarray     # (C,), simplex
    means: np.ndarray       # (C, r)
    variances: np.ndarray   # (C, r), floored diagonal
    pca: PcaModel
    log_likelihood_trace: np.ndarray
    converged: bool

    def to_dict(self) -> dict:
        """JSON-ready form: mixture parameters plus the PCA reference."""
        return {
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
            "pca": {
                "mean": self.pca.mean.tolist(),
                "directions": np.asarray(self.pca.directions).tolist(),
                "singular_values": self.pca.singular_values.tolist(),
            },
            "converged": self.converged,
            "log_likelihood": [float(v) for v in self.log_likelihood_trace],
        }


_VAR_FLOOR = 1e-8


def _kmeans_pp(points: np.ndarray, c: int, stream: rng.Stream) -> np.ndarray:
    """Squared-distance seeding followed by 20 Lloyd iterations."""
    n = points.shape[0]
    centers = [points[int(stream.integers_below(n, 1)[0])]]
    for _ in range(c - 1):
        d2 = np.min([np.sum((points - ctr) ** 2, axis=1) for ctr in centers], axis=0)
        total = d2.sum()
        if total == 0.0:
            centers.append(points[int(stream.integers_below(n, 1)[0])])
            continue
        target = stream.uniforms(1)[0] * total
        centers.append(points[int(np.searchsorted(np.cumsum(d2), target))])
    centers = np.array(centers)
    for _ in range(20):
        d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        labels = d2.argmin(axis=1)
        for j in range(c):
            mask = labels == j
            if mask.any():
                centers[j] = points[mask].mean(axis=0)
    return centers


def _log_gauss_diag(points, means, variances):
    """(n, C) log densities of diagonal Gaussians."""
    diff2 = (points[:, None, :] - means[None, :, :]) ** 2
    return -0.5 * (np.sum(diff2 / variances[None] + np.log(2.0 * np.pi * variances[None]),
                          axis=2))


def fit_gmm_pca(mem: MemoryMatrix, rank: int = 50, components: int = 10,
                tol: float = 1e-8, seed: int = 0, max_iter: int = 500) -> GmmModel:
    """Project patterns to the top-`rank` SVD directions and fit a
    diagonal-covariance GMM by EM.

    The projection keeps the raw (uncentered) left singular vectors of
    the memory matrix. EM starts from k-means++ and stops when the
    log-likelihood moves less than tol; a degenerate component triggers
    one reseeded retry.
    """
    if mem.K <= components:
        raise ValueError("need more patterns than components (K=%d, C=%d)"
                         % (mem.K, components))
    rank = min(rank, mem.d, mem.K)
    pca = fit_pca(mem.columns, fixed_rank=rank, center=False)
    codes = (pca.directions.T @ mem.columns).T  # (K, r)

    last_err = None
    for attempt in range(2):
        stream = rng.Stream(rng.derive(seed, rng.GMM, attempt))
        try:
            return _fit_em(codes, components, tol, max_iter, stream, pca)
        except _DegenerateComponent as err:
            last_err = err
    raise ValueError("EM produced a degenerate component twice: %s" % last_err)


class _DegenerateComponent(Exception):
    pass


def _fit_em(codes, c, tol, max_iter, stream, pca) -> GmmModel:
    n, r = codes.shape
    means = _kmeans_pp(codes, c, stream)
    variances = np.maximum(codes.var(axis=0), _VAR_FLOOR)[None, :].repeat(c, axis=0)
    weights = np.full(c, 1.0 / c)

    trace = []
    converged = False
    for _ in range(max_iter):
        log_prob = _log_gauss_diag(codes, means, variances) + np.log(weights)[None]
        m = log_prob.max(axis=1, keepdims=True)
        log_norm = m[:, 0] + np.log(np.exp(log_prob - m).sum(axis=1))
        ll = float(log_norm.sum())
        resp = np.exp(log_prob - log_norm[:, None])

        nk = resp.sum(axis=0)
        if np.any(nk < 1e-12):
            raise _DegenerateComponent("component weight collapsed to zero")
        weights = nk / n
        means = (resp.T @ codes) / nk[:, None]
        sq = resp.T @ (codes ** 2) / nk[:, None]
        variances = np.maximum(sq - means ** 2, _VAR_FLOOR)

        if trace and abs(ll - trace[-1]) < tol:
            trace.append(ll)
            converged = True
            break
        trace.append(ll)

    return GmmModel(weights, means, variances, pca, np.array(trace), converged)


def gmm_pca_samples(model: GmmModel, count: int, seed: int) -> SampleSet:
    """Component -> diagonal Gaussian code -> reconstruct -> unit norm."""
    s = rng.Stream(rng.derive(seed, rng.GMM, 100))
    cum = np.cumsum(model.weights)
    comp = np.searchsorted(cum, s.uniforms(count) * cum[-1])
    comp = np.minimum(comp, model.weights.size - 1)
    z = (model.means[comp]
         + np.sqrt(model.variances[comp]) * s.normals(count * model.means.shape[1])
         .reshape(count, -1))
    x = pca_reconstruct(model.pca, z.T).T
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    if np.any(norms == 0.0):
        raise ValueError("GMM produced a zero sample; cannot normalize")
    return _sample_set(x / norms, "gmm-pca")


# ---------------------------------------------------------------------------
# noise controls

def matched_gaussian_control(sa_samples: np.ndarray, count: int, seed: int) -> SampleSet:
    """Per-coordinate independent Gaussians matching the SA set's
    empirical mean and variance."""
    x = np.atleast_2d(np.asarray(sa_samples, dtype=np.float64))
    mu = x.mean(axis=0)
    sd = x.std(axis=0)
    s = rng.Stream(rng.derive(seed, rng.CONTROL, 0))
    g = s.normals(count * mu.size).reshape(count, mu.size)
    return _sample_set(mu + sd * g, "matched-gaussian")


def isotropic_gaussian_control(sa_samples: np.ndarray, count: int, seed: int) -> SampleSet:
    """Standard Gaussians rescaled to the SA set's mean norm."""
    x = np.atleast_2d(np.asarray(sa_samples, dtype=np.float64))
    target = float(np.mean(np.linalg.norm(x, axis=1)))
    s = rng.Stream(rng.derive(seed, rng.CONTROL, 1))
    g = s.normals(count * x.shape[1]).reshape(count, x.shape[1])
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    return _sample_set(g / norms * target, "isotropic-gaussian")
