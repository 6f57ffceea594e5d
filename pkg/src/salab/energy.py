"""The analytic core: log-sum-exp energy, attention, and its calculus.

All quantities are exercised heavily by the samplers, so the module
keeps two layers: the public per-state operations, and batched private
helpers operating on (d, n) state matrices that the samplers call in
their inner loops.

Energy convention: `full` includes the constants (1/beta) log K and
M^2/2, so the lower bound full >= (||xi|| - M)^2 / 2 holds; `reduced`
drops both constants and is what experiment tables report (a stored
unit pattern then sits at -1/2 for large beta).

Two limiting identities connect this energy to familiar objects and
need no operations of their own: with beta = 1/sqrt(d), one application
of retrieval_map is exactly scaled dot-product attention whose keys and
values are the stored patterns; and replacing the log-sum-exp term with
its second-order expansion around the origin recovers the classical
quadratic associative-memory energy over the same pattern set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .memory import MemoryMatrix


@dataclass(frozen=True)
class AttentionState:
    """Softmax weights over memories with entropy and similarity moments."""

    weights: np.ndarray        # p, (K,)
    similarities: np.ndarray   # e_k = m_k . xi, (K,)
    entropy: float             # H(p), nats
    mean_similarity: float     # <e>_p
    similarity_variance: float  # Var_p(e)
    similarity_third_moment: float  # third central moment of e under p


@dataclass(frozen=True)
class EnergyValue:
    full: float
    reduced: float


@dataclass(frozen=True)
class RegularityConstants:
    lipschitz: float          # L = 1 + beta sigma_max^2 / 2
    convexity_margin: float   # 1 - beta sigma_max^2 / 2
    dissipativity_a: float    # 1/2
    dissipativity_b: float    # M^2 / 2
    convex: bool              # beta sigma_max^2 < 2


def _check_beta(beta: float) -> None:
    if not (beta > 0):
        raise ValueError("beta must be positive")


def _check_state(mem: MemoryMatrix, xi: np.ndarray) -> np.ndarray:
    xi = np.asarray(xi, dtype=np.float64)
    if xi.shape != (mem.d,):
        raise ValueError("state has dimension %s, memory expects %d"
                         % (xi.shape, mem.d))
    return xi


def lse(z: np.ndarray, beta: float) -> float:
    """Scaled log-sum-exp (1/beta) log sum exp(beta z), max-shifted."""
    _check_beta(beta)
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 1 or z.size < 1:
        raise ValueError("z must be a nonempty vector")
    if not np.all(np.isfinite(z)):
        raise ValueError("z has non-finite entries")
    m = z.max()
    return float(m + np.log(np.sum(np.exp(beta * (z - m)))) / beta)


def softmax(logits: np.ndarray) -> np.ndarray:
    """Stable softmax along axis 0."""
    shifted = logits - logits.max(axis=0, keepdims=True)
    w = np.exp(shifted)
    return w / w.sum(axis=0, keepdims=True)


def entropy_of(p: np.ndarray, axis: int = 0) -> np.ndarray | float:
    """Shannon entropy in nats with the 0 log 0 = 0 convention."""
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(p > 0.0, p * np.log(p), 0.0)
    h = -t.sum(axis=axis)
    return float(h) if np.isscalar(h) or h.ndim == 0 else h


def attention(mem: MemoryMatrix, xi: np.ndarray, beta: float) -> AttentionState:
    """Attention weights softmax(beta X^T xi) with entropy and moments.

    The entropy is computed in the shifted form log1p(sum of non-max
    weights) - sum p_i s_i, which keeps full relative precision even
    when the distribution is within ulps of a point mass (the naive
    -sum p log p loses the tiny entropy to cancellation in log(1-d)).
    """
    _check_beta(beta)
    xi = _check_state(mem, xi)
    e = mem.columns.T @ xi
    s = beta * e
    top = int(np.argmax(s))
    s = s - s[top]
    w = np.exp(s)
    rest = float(np.sum(np.delete(w, top)))
    p = w / (1.0 + rest)
    entropy = float(np.log1p(rest) - p @ s)
    mean = float(p @ e)
    centered = e - mean
    var = float(p @ centered ** 2)
    mu3 = float(p @ centered ** 3)
    return AttentionState(p, e, entropy, mean, var, mu3)


def retrieval_map(mem: MemoryMatrix, xi: np.ndarray, beta: float) -> np.ndarray:
    """T(xi) = X softmax(beta X^T xi); lies in the convex hull of columns."""
    _check_beta(beta)
    xi = _check_state(mem, xi)
    return mem.columns @ softmax(beta * (mem.columns.T @ xi))


def energy(mem: MemoryMatrix, xi: np.ndarray, beta: float) -> EnergyValue:
    """Modern Hopfield energy at xi, in both conventions."""
    _check_beta(beta)
    xi = _check_state(mem, xi)
    reduced = -lse(mem.columns.T @ xi, beta) + 0.5 * float(xi @ xi)
    const = np.log(mem.K) / beta + 0.5 * mem.max_norm ** 2
    return EnergyValue(reduced + const, reduced)


def energy_gradient(mem: MemoryMatrix, xi: np.ndarray, beta: float) -> np.ndarray:
    """grad E = xi - T(xi)."""
    return _check_state(mem, xi) - retrieval_map(mem, xi, beta)


def entropy_derivative(state: AttentionState, beta: float) -> float:
    """dH/dbeta = -beta Var_p(e) for a fixed state."""
    return -beta * state.similarity_variance


def regularity_constants(mem: MemoryMatrix, beta: float) -> RegularityConstants:
    _check_beta(beta)
    half = beta * mem.sigma_max ** 2 / 2.0
    return RegularityConstants(
        lipschitz=1.0 + half,
        convexity_margin=1.0 - half,
        dissipativity_a=0.5,
        dissipativity_b=mem.max_norm ** 2 / 2.0,
        convex=half < 1.0,
    )


# ---------------------------------------------------------------------------
# batched helpers for the samplers; states are columns of a (d, n) matrix

def attention_batch(mem: MemoryMatrix, states: np.ndarray, beta) -> np.ndarray:
    """Weights (K, n) for states (d, n); beta scalar or per-column (n,)."""
    return softmax(np.asarray(beta) * (mem.columns.T @ states))


def reduced_energy_batch(mem: MemoryMatrix, states: np.ndarray, beta) -> np.ndarray:
    logits = np.asarray(beta) * (mem.columns.T @ states)
    m = logits.max(axis=0)
    lse_vals = m / np.asarray(beta) + np.log(np.exp(logits - m).sum(axis=0)) / np.asarray(beta)
    return -lse_vals + 0.5 * np.sum(states ** 2, axis=0)


def step_diagnostics(mem: MemoryMatrix, states: np.ndarray, beta):
    """(weights, reduced energy, entropy, max-cos) for states (d, n).

    Computes the shared logits once; max-cos uses the true cosine
    max_k e_k / (||m_k|| ||xi||), exact for unit-norm memories and still
    correct for raw ones.
    """
    e = mem.columns.T @ states                      # (K, n)
    logits = np.asarray(beta) * e
    m = logits.max(axis=0)
    expw = np.exp(logits - m)
    z = expw.sum(axis=0)
    p = expw / z
    lse_vals = (m + np.log(z)) / np.asarray(beta)
    energy_red = -lse_vals + 0.5 * np.sum(states ** 2, axis=0)
    ent = entropy_of(p, axis=0)
    col_norms = np.linalg.norm(mem.columns, axis=0)
    state_norms = np.linalg.norm(states, axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        cos = e / col_norms[:, None] / state_norms[None, :]
    maxcos = np.where(state_norms > 0.0, cos.max(axis=0), 0.0)
    return p, energy_red, ent, maxcos
