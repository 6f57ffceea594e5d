"""Langevin samplers on the Hopfield energy.

One update of the unadjusted chain is

    xi' = (1 - alpha) xi + alpha X softmax(beta X^T xi) + sqrt(2 alpha / beta) eps

i.e. a contraction toward the origin, an attention pull toward the
stored patterns, and temperature-scaled isotropic noise. The MALA
variant proposes with the same kernel and adds a Metropolis-Hastings
correction with the exact Gaussian-proposal asymmetry term.

Chains are vectorized: all chains of a run advance together, and every
random draw is keyed by (seed, tag, chain, step). A given (config,
seed) therefore reproduces bitwise on a platform, and nothing depends
on thread scheduling; only the fixed chain batching itself influences
the last floating-point ulp (BLAS summation order).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import rng
from .energy import softmax, step_diagnostics
from .memory import MemoryMatrix, PcaModel, memory_from_columns, pca_project, pca_reconstruct


@dataclass(frozen=True)
class SamplerConfig:
    """Everything that determines a run, including the master seed."""

    beta: float
    step_size: float            # alpha in (0, 1)
    steps: int                  # T
    burn_in: int                # B < T
    thin: int = 100
    chains: int = 1
    subsamples: int | None = None  # per-chain retained count; None keeps all
    init: object = "near-pattern"  # "near-pattern" | "origin" | explicit vector
    sigma_init: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if not (self.beta > 0):
            raise ValueError("beta must be positive")
        if not (0.0 < self.step_size < 1.0):
            raise ValueError("step size must lie in (0, 1)")
        if self.burn_in < 0 or self.burn_in >= self.steps:
            raise ValueError("need 0 <= burn_in < steps")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if self.chains < 1:
            raise ValueError("chains must be >= 1")
        kept = (self.steps - self.burn_in) // self.thin
        if kept < 1:
            raise ValueError("no snapshots survive burn-in and thinning")
        if self.subsamples is not None and not (1 <= self.subsamples <= kept):
            raise ValueError("subsamples must be in [1, %d]" % kept)
        if isinstance(self.init, str):
            if self.init not in ("near-pattern", "origin"):
                raise ValueError("unknown init mode %r" % self.init)

    def retained_steps(self) -> np.ndarray:
        """Post-burn-in thinned step indices."""
        kept = (self.steps - self.burn_in) // self.thin
        return self.burn_in + self.thin * np.arange(1, kept + 1)

    def subsample_indices(self) -> np.ndarray:
        """Evenly spaced positions among the retained snapshots."""
        kept = (self.steps - self.burn_in) // self.thin
        if self.subsamples is None:
            return np.arange(kept)
        s = self.subsamples
        if s == 1:
            return np.array([kept - 1])
        return np.floor(np.arange(s) * (kept - 1) / (s - 1) + 0.5).astype(int)


@dataclass
class Trajectory:
    """Per-chain record: thinned states plus per-step scalar diagnostics."""

    chain: int
    retained_steps: np.ndarray   # (m,)
    retained_states: np.ndarray  # (m, d)
    energies: np.ndarray         # (T+1,), reduced energy at xi_0..xi_T
    entropies: np.ndarray        # (T+1,)
    max_cos: np.ndarray          # (T+1,)
    accepted: np.ndarray | None = None  # (T,), MALA only

    def to_rows(self):
        """(header, rows): one row per retained state, chain/step first."""
        d = self.retained_states.shape[1]
        header = ["chain", "step"] + ["x%d" % i for i in range(d)]
        rows = np.column_stack([np.full(self.retained_steps.size, self.chain),
                                self.retained_steps, self.retained_states])
        return header, rows


@dataclass
class SampleSet:
    """Thinned, sub-sampled states pooled across chains."""

    samples: np.ndarray       # (S, d)
    chain_ids: np.ndarray     # (S,)
    step_indices: np.ndarray  # (S,)
    config: SamplerConfig | None = None
    origin: str = "sampler"

    @property
    def size(self) -> int:
        return self.samples.shape[0]

    def by_chain(self):
        """(chain id, row indices) pairs in ascending chain order."""
        for c in np.unique(self.chain_ids):
            yield int(c), np.nonzero(self.chain_ids == c)[0]

    def to_rows(self):
        """(header, rows): one row per sample, chain/step first."""
        d = self.samples.shape[1]
        header = ["chain", "step"] + ["x%d" % i for i in range(d)]
        return header, np.column_stack([self.chain_ids, self.step_indices,
                                        self.samples])


def ula_step(mem: MemoryMatrix, xi: np.ndarray, beta: float, alpha: float,
             noise: np.ndarray) -> np.ndarray:
    """One stochastic attention update with caller-supplied noise."""
    xi = np.asarray(xi, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    if xi.shape != (mem.d,) or noise.shape != (mem.d,):
        raise ValueError("state/noise dimension mismatch with memory (d=%d)" % mem.d)
    if not (beta > 0):
        raise ValueError("beta must be positive")
    if not (0.0 < alpha <= 1.0):
        raise ValueError("alpha must lie in (0, 1]")
    pull = mem.columns @ softmax(beta * (mem.columns.T @ xi))
    return (1.0 - alpha) * xi + alpha * pull + np.sqrt(2.0 * alpha / beta) * noise


def mala_step(mem: MemoryMatrix, xi: np.ndarray, beta: float, alpha: float,
              noise: np.ndarray, u: float):
    """One MALA update; returns (next state, accepted, log ratio).

    The energy difference uses the reduced energy (the dropped constants
    cancel exactly in the difference).
    """
    if not (0.0 < u < 1.0):
        raise ValueError("u must lie in (0, 1)")
    xi = np.asarray(xi, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    if xi.shape != (mem.d,) or noise.shape != (mem.d,):
        raise ValueError("state/noise dimension mismatch with memory (d=%d)" % mem.d)
    if not (beta > 0):
        raise ValueError("beta must be positive")
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must lie in (0, 1)")

    cur = xi[:, None]
    p, e_cur, _, _ = step_diagnostics(mem, cur, beta)
    mu = (1.0 - alpha) * cur + alpha * (mem.columns @ p)
    prop = mu + np.sqrt(2.0 * alpha / beta) * noise[:, None]
    p_star, e_prop, _, _ = step_diagnostics(mem, prop, beta)
    mu_star = (1.0 - alpha) * prop + alpha * (mem.columns @ p_star)

    log_r = float(-beta * (e_prop[0] - e_cur[0])
                  - beta / (4.0 * alpha) * (np.sum((cur - mu_star) ** 2)
                                            - np.sum((prop - mu) ** 2)))
    accepted = np.log(u) < min(0.0, log_r)
    nxt = prop[:, 0] if accepted else xi.copy()
    return nxt, bool(accepted), log_r


def _initial_states(mem: MemoryMatrix, cfg: SamplerConfig, betas: np.ndarray) -> np.ndarray:
    n = betas.shape[0]
    if isinstance(cfg.init, str) and cfg.init == "origin":
        return np.zeros((mem.d, n))
    if isinstance(cfg.init, str):  # near-pattern
        chooser = rng.Stream(rng.derive(cfg.seed, rng.INIT_CHOICE))
        if n <= mem.K:
            picks = chooser.choice_without_replacement(mem.K, n)
        else:
            picks = chooser.integers_below(mem.K, n)
        states = mem.columns[:, picks].copy()
        for c in range(n):
            eta = rng.normals(rng.derive(cfg.seed, rng.INIT_NOISE, c), mem.d)
            states[:, c] += cfg.sigma_init * eta
        return states
    vec = np.asarray(cfg.init, dtype=np.float64)
    if vec.shape != (mem.d,):
        raise ValueError("explicit init vector must have dimension %d" % mem.d)
    return np.repeat(vec[:, None], n, axis=1)


def _run_chains(mem: MemoryMatrix, cfg: SamplerConfig, betas: np.ndarray,
                mala: bool, force_accept: bool = False):
    """Shared chain driver; betas holds one inverse temperature per chain."""
    n = betas.shape[0]
    alpha = cfg.step_size
    T = cfg.steps
    scale = np.sqrt(2.0 * alpha / betas)
    noise_part = rng.derive_array(rng.derive(cfg.seed, rng.NOISE),
                                  np.arange(n, dtype=np.uint64))
    accept_part = rng.derive_array(rng.derive(cfg.seed, rng.ACCEPT),
                                   np.arange(n, dtype=np.uint64))

    states = _initial_states(mem, cfg, betas)
    p, e_red, ent, mcos = step_diagnostics(mem, states, betas)

    energies = np.empty((T + 1, n))
    entropies = np.empty((T + 1, n))
    max_cos = np.empty((T + 1, n))
    energies[0], entropies[0], max_cos[0] = e_red, ent, mcos
    accepts = np.empty((T, n), dtype=bool) if mala else None

    retained = cfg.retained_steps()
    kept_states = np.empty((retained.size, n, mem.d))
    kept_pos = {int(s): i for i, s in enumerate(retained)}

    for t in range(T):
        eps = rng.normal_matrix(rng.derive_from(noise_part, t), mem.d).T  # (d, n)
        mu = (1.0 - alpha) * states + alpha * (mem.columns @ p)
        prop = mu + scale * eps
        if not mala:
            states = prop
            p, e_red, ent, mcos = step_diagnostics(mem, states, betas)
        else:
            p_star, e_star, ent_star, mcos_star = step_diagnostics(mem, prop, betas)
            mu_star = (1.0 - alpha) * prop + alpha * (mem.columns @ p_star)
            log_r = (-betas * (e_star - e_red)
                     - betas / (4.0 * alpha) * (np.sum((states - mu_star) ** 2, axis=0)
                                                - np.sum((prop - mu) ** 2, axis=0)))
            u = rng.uniform_open_array(rng.derive_from(accept_part, t))
            acc = np.log(u) < np.minimum(0.0, log_r)
            if force_accept:
                acc = np.ones(n, dtype=bool)
            accepts[t] = acc
            states = np.where(acc, prop, states)
            p = np.where(acc, p_star, p)
            e_red = np.where(acc, e_star, e_red)
            ent = np.where(acc, ent_star, ent)
            mcos = np.where(acc, mcos_star, mcos)
        energies[t + 1], entropies[t + 1], max_cos[t + 1] = e_red, ent, mcos
        pos = kept_pos.get(t + 1)
        if pos is not None:
            kept_states[pos] = states.T

    trajectories = []
    for c in range(n):
        trajectories.append(Trajectory(
            chain=c,
            retained_steps=retained.copy(),
            retained_states=kept_states[:, c, :].copy(),
            energies=energies[:, c].copy(),
            entropies=entropies[:, c].copy(),
            max_cos=max_cos[:, c].copy(),
            accepted=accepts[:, c].copy() if mala else None,
        ))

    sub = cfg.subsample_indices()
    samples = kept_states[sub].transpose(1, 0, 2).reshape(n * sub.size, mem.d)
    chain_ids = np.repeat(np.arange(n), sub.size)
    step_indices = np.tile(retained[sub], n)
    sample_set = SampleSet(samples, chain_ids, step_indices, cfg,
                           origin="mala" if mala else "ula")
    return trajectories, sample_set


def run_ula(mem: MemoryMatrix, cfg: SamplerConfig):
    """Run the multi-chain protocol; returns (trajectories, SampleSet)."""
    betas = np.full(cfg.chains, float(cfg.beta))
    return _run_chains(mem, cfg, betas, mala=False)


def run_mala(mem: MemoryMatrix, cfg: SamplerConfig, _force_accept: bool = False):
    """MALA with the ULA noise streams; returns (.., .., acceptance rate)."""
    betas = np.full(cfg.chains, float(cfg.beta))
    trajectories, samples = _run_chains(mem, cfg, betas, mala=True,
                                        force_accept=_force_accept)
    rate = float(np.mean([tr.accepted.mean() for tr in trajectories]))
    return trajectories, samples, rate


def run_beta_grid(mem: MemoryMatrix, cfg: SamplerConfig, betas: np.ndarray):
    """One independent ULA chain per beta; chain i is stream i.

    Equivalent to run_ula with chains=1 once per beta, but advances the
    grid jointly. cfg.beta and cfg.chains are ignored.
    """
    betas = np.asarray(betas, dtype=np.float64)
    if np.any(betas <= 0):
        raise ValueError("all betas must be positive")
    grid_cfg = replace(cfg, beta=float(betas[0]), chains=int(betas.size))
    return _run_chains(mem, grid_cfg, betas, mala=False)


def run_warm_start_sequential(mem_scaled: MemoryMatrix, mem_raw: MemoryMatrix,
                              beta: float, alpha: float, t_inner: int,
                              t_days: int, seed: int):
    """Warm-started day-by-day MALA generation.

    Starts near a random stored pattern; each day continues the single
    chain for t_inner MALA steps from the previous endpoint and emits
    the raw-memory projection M softmax(beta X^T xi). Returns the
    (t_days, d_raw) output matrix and the mean acceptance rate.
    """
    if mem_scaled.K != mem_raw.K:
        raise ValueError("scaled and raw memories must share K (%d vs %d)"
                         % (mem_scaled.K, mem_raw.K))
    if t_inner < 0 or t_days < 1:
        raise ValueError("need t_inner >= 0 and t_days >= 1")
    if not (beta > 0) or not (0.0 < alpha < 1.0):
        raise ValueError("need beta > 0 and alpha in (0, 1)")

    init = rng.Stream(rng.derive(seed, rng.WARM_START))
    k = int(init.integers_below(mem_scaled.K, 1)[0])
    xi = mem_scaled.columns[:, k] + 0.01 * init.normals(mem_scaled.d)

    out = np.empty((t_days, mem_raw.d))
    n_acc = 0
    g = 0  # global inner-step counter
    for day in range(t_days):
        for _ in range(t_inner):
            eps = rng.normals(rng.derive(seed, rng.NOISE, 0, g), mem_scaled.d)
            u = rng.uniform_open(rng.derive(seed, rng.ACCEPT, 0, g))
            xi, accepted, _ = mala_step(mem_scaled, xi, beta, alpha, eps, u)
            n_acc += accepted
            g += 1
        w = softmax(beta * (mem_scaled.columns.T @ xi))
        out[day] = mem_raw.columns @ w
    rate = n_acc / g if g else 1.0
    return out, float(rate)


def head_partition(rank: int, heads: int) -> list[tuple[int, int]]:
    """Contiguous PC slices per head; the last head absorbs any remainder."""
    if heads < 1:
        raise ValueError("need at least one head")
    if heads > rank:
        raise ValueError("more heads (%d) than retained components (%d)"
                         % (heads, rank))
    base = rank // heads
    bounds = []
    lo = 0
    for h in range(heads):
        hi = lo + base if h < heads - 1 else rank
        bounds.append((lo, hi))
        lo = hi
    return bounds


def run_multihead(mem: MemoryMatrix, pca: PcaModel, heads: int,
                  cfg: SamplerConfig) -> SampleSet:
    """Independent Langevin chains on PCA-partitioned subspaces.

    Head h samples in the span of its PC slice against the projected
    (not re-normalized) memories, with child seed derive(seed, HEAD, h);
    per-sample head outputs are concatenated and mapped back through the
    retained directions plus the PCA mean.
    """
    bounds = head_partition(pca.rank, heads)
    codes = pca_project(pca, mem.columns)  # (rank, K)

    parts = []
    chain_ids = step_indices = None
    for h, (lo, hi) in enumerate(bounds):
        head_mem = memory_from_columns(codes[lo:hi, :])
        child = replace(cfg, seed=rng.derive(cfg.seed, rng.HEAD, h))
        _, ss = run_ula(head_mem, child)
        parts.append(ss.samples)
        if h == 0:
            chain_ids, step_indices = ss.chain_ids, ss.step_indices
    z = np.hstack(parts)  # (S, rank)
    samples = pca_reconstruct(pca, z.T).T
    return SampleSet(samples, chain_ids, step_indices, cfg, origin="multihead")
