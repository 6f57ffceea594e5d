"""Deterministic counter-based random streams.

All randomness in the package flows from a single 64-bit master seed.
Child streams are keyed by hashing (seed, path...) with the splitmix64
finalizer, and every stream is counter-based: the i-th output is a pure
function of (key, i). Gaussians come from Box-Muller on the stream's
uniforms, so results are identical across platforms and independent of
execution order (chains, grid cells, and threads never share state).

Stream layout used by the samplers, documented here because tests rely
on it:

  derive(seed, NOISE, chain, step)   -> d-vector of step noise
  derive(seed, ACCEPT, chain, step)  -> one acceptance uniform (MALA)
  derive(seed, INIT_CHOICE)          -> seed-pattern selection stream
  derive(seed, INIT_NOISE, chain)    -> init perturbation
  derive(seed, HEAD, h)              -> child master seed of head h

Noise is always drawn before the acceptance uniform within a step, and
the two live on separate counters, so ULA and MALA consume identical
noise streams.
"""

from __future__ import annotations

import numpy as np

_MASK = 0xFFFFFFFFFFFFFFFF
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# tags for derive(); values are arbitrary but frozen (changing them
# changes every sampled number)
NOISE = 1
ACCEPT = 2
INIT_CHOICE = 3
INIT_NOISE = 4
HEAD = 5
SPHERE = 6
SELECT = 7
PROBES = 8
BOOTSTRAP = 9
PERTURB = 10
CONVEX = 11
GMM = 12
CONTROL = 13
WARM_START = 14
DATASET = 15

_U = {k: np.uint64(v) for k, v in
      dict(GAMMA=_GAMMA, MIX1=_MIX1, MIX2=_MIX2, S30=30, S27=27, S31=31).items()}


def _mix(z: int) -> int:
    """splitmix64 finalizer on a python int."""
    z = (z + _GAMMA) & _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def _mix_array(z: np.ndarray) -> np.ndarray:
    z = z + _U["GAMMA"]
    z = (z ^ (z >> _U["S30"])) * _U["MIX1"]
    z = (z ^ (z >> _U["S27"])) * _U["MIX2"]
    return z ^ (z >> _U["S31"])


def derive(seed: int, *path: int) -> int:
    """Hash (seed, path...) into a 64-bit stream key."""
    h = _mix(seed & _MASK)
    for c in path:
        h = _mix(h ^ _mix(c & _MASK))
    return h


def _raw(key: int, n: int) -> np.ndarray:
    """Outputs 0..n-1 of the splitmix64 stream with the given key."""
    ctr = np.arange(1, n + 1, dtype=np.uint64) * _U["GAMMA"]
    return _mix_array(np.uint64(key) + ctr)


def uniforms(key: int, n: int) -> np.ndarray:
    """n uniforms in [0, 1)."""
    return (_raw(key, n) >> np.uint64(11)).astype(np.float64) * 2.0 ** -53


def uniform_open(key: int) -> float:
    """One uniform in the open interval (0, 1); safe under log()."""
    r = int(_raw(key, 1)[0])
    return ((r >> 12) + 0.5) * 2.0 ** -52


def normals(key: int, n: int) -> np.ndarray:
    """n standard normals by Box-Muller; consumes 2*ceil(n/2) raws."""
    pairs = (n + 1) // 2
    raw = _raw(key, 2 * pairs)
    u1 = ((raw[0::2] >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0 ** -53
    u2 = (raw[1::2] >> np.uint64(11)).astype(np.float64) * 2.0 ** -53
    r = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * np.pi * u2
    out = np.empty(2 * pairs)
    out[0::2] = r * np.cos(theta)
    out[1::2] = r * np.sin(theta)
    return out[:n]


def normal_matrix(keys: np.ndarray, n: int) -> np.ndarray:
    """Row i holds normals(keys[i], n); vectorized across streams."""
    pairs = (n + 1) // 2
    ctr = np.arange(1, 2 * pairs + 1, dtype=np.uint64) * _U["GAMMA"]
    raw = _mix_array(keys.astype(np.uint64)[:, None] + ctr[None, :])
    u1 = ((raw[:, 0::2] >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0 ** -53
    u2 = (raw[:, 1::2] >> np.uint64(11)).astype(np.float64) * 2.0 ** -53
    r = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * np.pi * u2
    out = np.empty((keys.shape[0], 2 * pairs))
    out[:, 0::2] = r * np.cos(theta)
    out[:, 1::2] = r * np.sin(theta)
    return out[:, :n]


def derive_array(key: int, path_values: np.ndarray) -> np.ndarray:
    """derive(key, v) for every v in path_values, as uint64 keys."""
    vals = _mix_array(path_values.astype(np.uint64))
    return _mix_array(np.uint64(key) ^ vals)


def derive_from(keys: np.ndarray, value: int) -> np.ndarray:
    """Extend every partial key by one path component (matches derive)."""
    return _mix_array(keys ^ np.uint64(_mix(value & _MASK)))


def uniform_open_array(keys: np.ndarray) -> np.ndarray:
    """First uniform of each stream, in (0, 1)."""
    raw = _mix_array(keys + _U["GAMMA"])
    return ((raw >> np.uint64(12)).astype(np.float64) + 0.5) * 2.0 ** -52


class Stream:
    """Sequential view over one counter-based stream.

    Used where draws are naturally consumed one after another (pattern
    selection, baseline sampling). Each method advances the counter by
    exactly the number of raws it consumes.
    """

    def __init__(self, key: int):
        self.key = key
        self.pos = 0

    def _take(self, n: int) -> np.ndarray:
        ctr = np.arange(self.pos + 1, self.pos + n + 1, dtype=np.uint64) * _U["GAMMA"]
        self.pos += n
        return _mix_array(np.uint64(self.key) + ctr)

    def uniforms(self, n: int) -> np.ndarray:
        return (self._take(n) >> np.uint64(11)).astype(np.float64) * 2.0 ** -53

    def normals(self, n: int) -> np.ndarray:
        pairs = (n + 1) // 2
        raw = self._take(2 * pairs)
        u1 = ((raw[0::2] >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0 ** -53
        u2 = (raw[1::2] >> np.uint64(11)).astype(np.float64) * 2.0 ** -53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        out = np.empty(2 * pairs)
        out[0::2] = r * np.cos(theta)
        out[1::2] = r * np.sin(theta)
        return out[:n]

    def integers_below(self, bound: int, n: int) -> np.ndarray:
        """n integers in [0, bound); floor-of-uniform, bias < bound/2^53."""
        return np.minimum((self.uniforms(n) * bound).astype(np.int64), bound - 1)

    def choice_without_replacement(self, population: int, k: int) -> np.ndarray:
        """k distinct indices from range(population), partial Fisher-Yates."""
        if k > population:
            raise ValueError("cannot draw %d distinct items from %d" % (k, population))
        idx = np.arange(population)
        for i in range(k):
            j = i + int(self.integers_below(population - i, 1)[0])
            idx[i], idx[j] = idx[j], idx[i]
        return idx[:k].copy()
