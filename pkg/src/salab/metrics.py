"""Evaluation statistics for generated samples.

Cosine-based sample metrics (novelty, diversity, max-cos), energy
summaries, the two-sample KS test, categorical divergences for
alignments (global KL, per-position KL, mutual-information coupling),
autocorrelation, and the chain-level mean/SE aggregation used by every
results table.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataio import AMINO_ACIDS, GAP, Alignment
from .energy import AttentionState, reduced_energy_batch
from .memory import MemoryMatrix


def _unit_rows(x: np.ndarray, what: str) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    norms = np.linalg.norm(x, axis=1)
    if np.any(norms == 0.0):
        raise ValueError("%s contains a zero vector" % what)
    return x / norms[:, None]


def max_cos(mem: MemoryMatrix, sample: np.ndarray) -> float:
    """Largest cosine similarity between the sample and any stored pattern.

    A sample that is bitwise one of the stored columns scores exactly 1,
    so replayed patterns have novelty 0 with no rounding residue.
    """
    s = np.asarray(sample, dtype=np.float64).reshape(-1)
    sn = np.linalg.norm(s)
    if sn == 0.0:
        raise ValueError("sample contains a zero vector")
    norms = np.linalg.norm(mem.columns, axis=0)
    cos = (mem.columns.T @ s) / (norms * sn)
    best = int(np.argmax(cos))
    if np.array_equal(mem.columns[:, best], s):
        return 1.0
    return float(np.clip(cos[best], -1.0, 1.0))


def novelty(mem: MemoryMatrix, sample: np.ndarray) -> float:
    """1 - max-cos: departure from the nearest stored pattern, in [0, 2]."""
    return 1.0 - max_cos(mem, sample)


def diversity(samples: np.ndarray) -> float:
    """Mean pairwise cosine distance among samples (rows)."""
    x = _unit_rows(samples, "samples")
    s = x.shape[0]
    if s < 2:
        raise ValueError("diversity needs at least 2 samples")
    gram = np.clip(x @ x.T, -1.0, 1.0)
    iu = np.triu_indices(s, k=1)
    return float(np.mean(1.0 - gram[iu]))


def mean_energy(mem: MemoryMatrix, samples: np.ndarray, beta: float) -> float:
    """Mean reduced Hopfield energy of the sample rows."""
    x = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    return float(np.mean(reduced_energy_batch(mem, x.T, beta)))


def concentration(state: AttentionState, K: int) -> float:
    """C = 1 - H/log K: 1 at a point mass, 0 at the uniform limit."""
    if K < 1:
        raise ValueError("K must be >= 1")
    if K == 1:
        return 1.0
    return float(1.0 - state.entropy / np.log(K))


def concentration_from_entropy(h, K: int):
    if K == 1:
        return np.ones_like(np.asarray(h, dtype=np.float64))
    return 1.0 - np.asarray(h, dtype=np.float64) / np.log(K)


# ---------------------------------------------------------------------------
# two-sample Kolmogorov-Smirnov

def _kolmogorov_sf(lam: float) -> float:
    """Survival function of the Kolmogorov distribution.

    Alternating series for moderate/large lambda, theta-dual form for
    small lambda where the standard series converges too slowly.
    """
    if lam <= 0.0:
        return 1.0
    if lam < 0.5:
        # 1 - sqrt(2 pi)/lam * sum exp(-(2k-1)^2 pi^2 / (8 lam^2))
        total = 0.0
        for k in range(1, 101):
            total += np.exp(-((2 * k - 1) ** 2) * np.pi ** 2 / (8.0 * lam ** 2))
        return float(min(1.0, max(0.0, 1.0 - np.sqrt(2.0 * np.pi) / lam * total)))
    total = 0.0
    for k in range(1, 101):
        term = (-1.0) ** (k - 1) * np.exp(-2.0 * k * k * lam * lam)
        total += term
        if abs(term) < 1e-18:
            break
    return float(min(1.0, max(0.0, 2.0 * total)))


def ks_two_sample(a, b) -> tuple[float, float]:
    """KS statistic sup|F_a - F_b| and its asymptotic p-value.

    The p-value uses the Kolmogorov distribution at
    sqrt(n_a n_b / (n_a + n_b)) * D.
    """
    a = np.sort(np.asarray(a, dtype=np.float64).ravel())
    b = np.sort(np.asarray(b, dtype=np.float64).ravel())
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be nonempty")
    pooled = np.concatenate([a, b])
    fa = np.searchsorted(a, pooled, side="right") / a.size
    fb = np.searchsorted(b, pooled, side="right") / b.size
    stat = float(np.max(np.abs(fa - fb)))
    n_eff = a.size * b.size / (a.size + b.size)
    return stat, _kolmogorov_sf(np.sqrt(n_eff) * stat)


# ---------------------------------------------------------------------------
# categorical divergences over alignments

def categorical_kl(p_ref, q, pseudocount: float = 0.5) -> float:
    """KL(p_ref || q) with additive smoothing on both sides."""
    p = np.asarray(p_ref, dtype=np.float64)
    qq = np.asarray(q, dtype=np.float64)
    if p.shape != qq.shape:
        raise ValueError("distributions differ in size")
    if pseudocount <= 0:
        raise ValueError("pseudocount must be positive")
    if np.any(p < 0) or np.any(qq < 0):
        raise ValueError("frequencies must be nonnegative")
    ps = (p + pseudocount) / (p.sum() + pseudocount * p.size)
    qs = (qq + pseudocount) / (qq.sum() + pseudocount * qq.size)
    return float(np.sum(ps * np.log(ps / qs)))


def aa_counts(a: Alignment) -> np.ndarray:
    """Global amino acid counts over the whole alignment (gaps skipped)."""
    counts = np.zeros(20)
    for row in a.rows:
        for ch in row:
            if ch != GAP:
                counts[AMINO_ACIDS.index(ch)] += 1
    return counts


def position_counts(a: Alignment) -> np.ndarray:
    """(L, 20) per-position amino acid counts."""
    counts = np.zeros((a.L, 20))
    for row in a.rows:
        for pos, ch in enumerate(row):
            if ch != GAP:
                counts[pos, AMINO_ACIDS.index(ch)] += 1
    return counts


def per_position_kl(stored: Alignment, generated: Alignment,
                    pseudocount: float = 0.5) -> float:
    """Mean over positions of KL(stored_pos || generated_pos)."""
    if stored.L != generated.L:
        raise ValueError("alignments differ in length")
    cs = position_counts(stored)
    cg = position_counts(generated)
    return float(np.mean([categorical_kl(cs[i], cg[i], pseudocount)
                          for i in range(stored.L)]))


def mi_matrix(a: Alignment, pseudocount: float = 0.5) -> np.ndarray:
    """Pairwise mutual information between residue positions, (L, L).

    Joint counts (gap-free pairs) are smoothed with the pseudocount per
    cell; marginals come from the smoothed joint, keeping MI >= 0. The
    diagonal is left at zero.
    """
    if pseudocount <= 0:
        raise ValueError("pseudocount must be positive")
    m = np.array([[(_idx(ch)) for ch in row] for row in a.rows])  # (K, L), -1 = gap
    L = a.L
    out = np.zeros((L, L))
    for i in range(L):
        ci = m[:, i]
        for j in range(i + 1, L):
            cj = m[:, j]
            ok = (ci >= 0) & (cj >= 0)
            joint = np.zeros((20, 20))
            np.add.at(joint, (ci[ok], cj[ok]), 1.0)
            joint += pseudocount
            joint /= joint.sum()
            pi = joint.sum(axis=1)
            pj = joint.sum(axis=0)
            mi = float(np.sum(joint * np.log(joint / np.outer(pi, pj))))
            out[i, j] = out[j, i] = mi
    return out


def _idx(ch: str) -> int:
    return AMINO_ACIDS.index(ch) if ch != GAP else -1


def mi_correlation(m1: np.ndarray, m2: np.ndarray) -> float:
    """Pearson r over the strict upper triangles of two MI matrices."""
    m1 = np.asarray(m1, dtype=np.float64)
    m2 = np.asarray(m2, dtype=np.float64)
    if m1.shape != m2.shape or m1.ndim != 2 or m1.shape[0] != m1.shape[1]:
        raise ValueError("need two square matrices of equal shape")
    iu = np.triu_indices(m1.shape[0], k=1)
    x, y = m1[iu], m2[iu]
    sx, sy = x.std(), y.std()
    if sx == 0.0 or sy == 0.0:
        raise ValueError("degenerate MI matrix: zero variance off-diagonal")
    return float(np.mean((x - x.mean()) * (y - y.mean())) / (sx * sy))


def sequence_identity(candidate: str, stored: Alignment) -> float:
    """Max over stored rows of the fraction of matching non-gap positions."""
    best = 0.0
    for row in stored.rows:
        pairs = [(c, s) for c, s in zip(candidate, row) if c != GAP and s != GAP]
        if not pairs:
            continue
        best = max(best, sum(c == s for c, s in pairs) / len(pairs))
    return best


# ---------------------------------------------------------------------------
# time series and distribution-shape helpers

def acf(series, max_lag: int) -> np.ndarray:
    """Autocorrelation at lags 1..max_lag (biased normalization)."""
    x = np.asarray(series, dtype=np.float64).ravel()
    if max_lag < 1 or max_lag >= x.size:
        raise ValueError("need 1 <= max_lag < len(series)")
    xc = x - x.mean()
    denom = float(xc @ xc)
    if denom == 0.0:
        raise ValueError("zero-variance series has no autocorrelation")
    return np.array([float(xc[:-l] @ xc[l:]) / denom for l in range(1, max_lag + 1)])


def white_noise_band(n: int, confidence: float = 0.99) -> float:
    """Half-width of the white-noise ACF band, z/sqrt(n)."""
    z = {0.99: 2.5758293035489004, 0.95: 1.959963984540054}.get(confidence)
    if z is None:
        raise ValueError("confidence must be 0.95 or 0.99")
    return z / np.sqrt(n)


def frobenius_correlation_error(hist: np.ndarray, gen: np.ndarray) -> float:
    """||C_hist - C_gen||_F / ||C_hist||_F as a percentage."""
    h = np.asarray(hist, dtype=np.float64)
    g = np.asarray(gen, dtype=np.float64)
    if h.shape != g.shape:
        raise ValueError("correlation matrices differ in shape")
    denom = np.linalg.norm(h)
    if denom == 0.0:
        raise ValueError("reference correlation matrix is zero")
    return float(np.linalg.norm(h - g) / denom * 100.0)


def frechet_diagonal(a: np.ndarray, b: np.ndarray) -> float:
    """Diagonal-Gaussian Frechet distance between two sample sets (rows)."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    mu_a, mu_b = a.mean(axis=0), b.mean(axis=0)
    va, vb = a.var(axis=0), b.var(axis=0)
    return float(np.sum((mu_a - mu_b) ** 2) + np.sum((np.sqrt(va) - np.sqrt(vb)) ** 2))


# ---------------------------------------------------------------------------
# aggregation

@dataclass(frozen=True)
class MetricEntry:
    name: str
    mean: float
    se: float
    n: int


@dataclass(frozen=True)
class MetricReport:
    entries: tuple

    def __getitem__(self, name: str) -> MetricEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def names(self):
        return [e.name for e in self.entries]


def summarize(name: str, per_chain_values) -> MetricEntry:
    """Mean over chain values; SE is their sample std over sqrt(n)."""
    v = np.asarray(list(per_chain_values), dtype=np.float64)
    if v.size == 0:
        raise ValueError("no chain values for %r" % name)
    if v.size == 1:
        return MetricEntry(name, float(v[0]), 0.0, 1)
    se = float(v.std(ddof=1) / np.sqrt(v.size))
    return MetricEntry(name, float(v.mean()), se, int(v.size))


def aggregate_report(per_chain: dict) -> MetricReport:
    """MetricReport from {metric name: per-chain values}."""
    return MetricReport(tuple(summarize(k, v) for k, v in per_chain.items()))


def report_rows(report: MetricReport):
    """(header, rows) in the metric,mean,se,n CSV layout."""
    header = ["metric", "mean", "se", "n"]
    return header, [[e.name, e.mean, e.se, e.n] for e in report.entries]


def report_dict(report: MetricReport) -> dict:
    """JSON-ready mapping of the report."""
    return {e.name: {"mean": e.mean, "se": e.se, "n": e.n}
            for e in report.entries}
