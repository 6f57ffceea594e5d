"""Temperature selection via the attention-entropy inflection.

The mean attention entropy over a probe set falls from log K to 0 as
beta grows; its steepest descent marks the retrieval-generation
boundary. We sweep a log-spaced beta grid, difference the curve in
log-beta, and put beta* at the zero crossing of d2H/dbeta2. For random
unit-norm memories beta* ~ sqrt(d).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng
from .energy import entropy_of, softmax
from .memory import MemoryMatrix


@dataclass(frozen=True)
class EntropyCurve:
    betas: np.ndarray       # ascending grid
    entropy: np.ndarray     # mean H over probes
    dh_dbeta: np.ndarray
    d2h_dbeta2: np.ndarray


def default_probes(d: int, count: int = 64, seed: int = 0) -> np.ndarray:
    """Random unit vectors as probe states, one per column."""
    g = rng.normals(rng.derive(seed, rng.PROBES), d * count).reshape(d, count, order="F")
    return g / np.linalg.norm(g, axis=0)


def _log_grid_derivative(u: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Centered differences on the (irregular) grid u, one-sided at the ends."""
    out = np.empty_like(y)
    out[1:-1] = (y[2:] - y[:-2]) / (u[2:] - u[:-2])
    out[0] = (y[1] - y[0]) / (u[1] - u[0])
    out[-1] = (y[-1] - y[-2]) / (u[-1] - u[-2])
    return out


def entropy_curve(mem: MemoryMatrix, probes: np.ndarray,
                  beta_grid: np.ndarray) -> EntropyCurve:
    """Mean attention entropy over probes at each beta, with derivatives.

    Derivatives are taken in log-beta to respect log-spaced grids:
    dH/dbeta = H'(u)/beta for u = log beta, and d2H/dbeta2 is the
    log-grid derivative of dH/dbeta divided by beta again.
    """
    beta_grid = np.asarray(beta_grid, dtype=np.float64)
    if beta_grid.size < 5:
        raise ValueError("beta grid needs at least 5 points")
    if np.any(beta_grid <= 0) or np.any(np.diff(beta_grid) <= 0):
        raise ValueError("beta grid must be positive and strictly ascending")
    probes = np.asarray(probes, dtype=np.float64)
    if probes.ndim != 2 or probes.shape[0] != mem.d:
        raise ValueError("probes must be a d x n matrix")

    sims = mem.columns.T @ probes  # (K, n)
    h = np.empty(beta_grid.size)
    for i, b in enumerate(beta_grid):
        p = softmax(b * sims)
        h[i] = float(np.mean(entropy_of(p, axis=0)))

    u = np.log(beta_grid)
    dh = _log_grid_derivative(u, h) / beta_grid
    d2h = _log_grid_derivative(u, dh) / beta_grid
    return EntropyCurve(beta_grid.copy(), h, dh, d2h)


def find_beta_star(curve: EntropyCurve) -> float:
    """beta at the zero crossing of d2H/dbeta2.

    Crossings are located by linear interpolation in log-beta between
    bracketing grid points; with several crossings the one at the
    largest entropy-loss rate |dH/dbeta| wins.
    """
    u = np.log(curve.betas)
    d2 = curve.d2h_dbeta2
    best = None
    for i in range(1, d2.size - 2):
        a, b = d2[i], d2[i + 1]
        if a == 0.0:
            u_star, w = u[i], abs(curve.dh_dbeta[i])
        elif a * b < 0.0:
            frac = a / (a - b)
            u_star = u[i] + frac * (u[i + 1] - u[i])
            w = abs(curve.dh_dbeta[i] + frac * (curve.dh_dbeta[i + 1] - curve.dh_dbeta[i]))
        else:
            continue
        if best is None or w > best[1]:
            best = (u_star, w)
    if best is None:
        raise ValueError("no inflection (d2H/dbeta2 sign change) in range; "
                         "widen the beta grid")
    return float(np.exp(best[0]))


def snr(alpha: float, beta: float, d: int) -> float:
    """Per-step signal-to-noise ratio sqrt(alpha beta / 2d)."""
    if alpha <= 0 or beta <= 0 or d <= 0:
        raise ValueError("alpha, beta, d must be positive")
    return float(np.sqrt(alpha * beta / (2.0 * d)))


def snr_star(alpha: float, d: int) -> float:
    """Critical SNR sqrt(alpha / (2 sqrt(d))) for random unit-norm memories."""
    if alpha <= 0 or d <= 0:
        raise ValueError("alpha and d must be positive")
    return float(np.sqrt(alpha / (2.0 * np.sqrt(d))))


def beta_for_snr(target_snr: float, alpha: float, d: int) -> float:
    """Invert snr(): beta = 2 d snr^2 / alpha."""
    if target_snr <= 0 or alpha <= 0 or d <= 0:
        raise ValueError("target_snr, alpha, d must be positive")
    return float(2.0 * d * target_snr ** 2 / alpha)
