import numpy as np
import pytest

from salab import (attention, energy, energy_gradient, entropy_derivative, lse,
                   make_random_sphere_memory, memory_from_columns,
                   regularity_constants, retrieval_map)
from salab.energy import entropy_of, softmax


def random_instance(rs, d_max=16, k_max=8):
    d = int(rs.integers(2, d_max + 1))
    k = int(rs.integers(2, k_max + 1))
    mem = make_random_sphere_memory(d, k, seed=int(rs.integers(1 << 30)))
    xi = rs.normal(size=d)
    return mem, xi


def fd_gradient(mem, xi, beta, h=1e-5):
    g = np.empty_like(xi)
    for i in range(xi.size):
        e = np.zeros_like(xi)
        e[i] = h
        g[i] = (energy(mem, xi + e, beta).full - energy(mem, xi - e, beta).full) / (2 * h)
    return g


def fd_hessian(mem, xi, beta, h=1e-5):
    d = xi.size
    hess = np.empty((d, d))
    for j in range(d):
        e = np.zeros(d)
        e[j] = h
        hess[:, j] = (energy_gradient(mem, xi + e, beta)
                      - energy_gradient(mem, xi - e, beta)) / (2 * h)
    return 0.5 * (hess + hess.T)


# ---------------------------------------------------------------------------
# lse

def test_lse_constant_vector():
    assert abs(lse(np.full(5, 1.7), 2.0) - (1.7 + np.log(5) / 2.0)) < 1e-12


def test_lse_single_entry():
    for beta in (0.1, 1.0, 50.0):
        assert abs(lse(np.array([0.3]), beta) - 0.3) < 1e-15


def test_lse_no_overflow_extended_precision_oracle():
    import mpmath
    z = np.array([0.0, 1000.0])
    got = lse(z, 1.0)
    with mpmath.workdps(60):
        want = float(mpmath.log(mpmath.e ** 0 + mpmath.e ** 1000))
    assert abs(got - want) < 1e-12
    assert abs(got - 1000.0) < 1e-12


def test_lse_bracketed_by_max():
    rs = np.random.default_rng(0)
    for _ in range(20):
        z = rs.normal(size=6)
        beta = float(rs.uniform(0.1, 30))
        v = lse(z, beta)
        assert z.max() <= v + 1e-12
        assert v <= z.max() + np.log(6) / beta + 1e-12


def test_lse_rejects_bad_args():
    with pytest.raises(ValueError):
        lse(np.array([1.0]), 0.0)
    with pytest.raises(ValueError):
        lse(np.array([1.0, np.inf]), 1.0)


# ---------------------------------------------------------------------------
# attention

def test_attention_small_beta_uniform():
    mem = make_random_sphere_memory(64, 16, seed=1)
    st = attention(mem, mem.columns[:, 0], 1e-12)
    assert np.max(np.abs(st.weights - 1.0 / 16)) < 1e-9
    assert abs(st.entropy - np.log(16)) < 1e-9


def test_attention_hand_computed_two_patterns():
    # e = (1, 0) at beta = ln 3 gives weights (3/4, 1/4)
    mem = memory_from_columns(np.array([[1.0, 0.0], [0.0, 1.0]]))
    st = attention(mem, np.array([1.0, 0.0]), np.log(3.0))
    assert np.allclose(st.similarities, [1.0, 0.0])
    assert np.allclose(st.weights, [0.75, 0.25], atol=1e-12)


def test_attention_simplex_under_extreme_logits():
    mem = make_random_sphere_memory(8, 5, seed=2)
    for beta in (1e4, 1e7, 1e9):
        st = attention(mem, 3.0 * mem.columns[:, 1], beta)
        assert np.all(st.weights >= 0.0)
        assert abs(st.weights.sum() - 1.0) < 1e-12
        assert 0.0 <= st.entropy <= np.log(5) + 1e-12


def test_attention_dimension_mismatch():
    mem = make_random_sphere_memory(8, 5, seed=2)
    with pytest.raises(ValueError):
        attention(mem, np.zeros(7), 1.0)


# ---------------------------------------------------------------------------
# retrieval map

def test_retrieval_small_beta_is_pattern_mean():
    mem = make_random_sphere_memory(16, 6, seed=3)
    t = retrieval_map(mem, np.ones(16), 1e-13)
    assert np.max(np.abs(t - mem.columns.mean(axis=1))) < 1e-9


def test_retrieval_hard_max_limit():
    mem = make_random_sphere_memory(32, 8, seed=4)
    target = mem.columns[:, 5]
    t = retrieval_map(mem, target + 0.01, 1e6)
    assert np.max(np.abs(t - target)) < 1e-6


def test_retrieval_stays_in_hull():
    mem = make_random_sphere_memory(12, 5, seed=5)
    rs = np.random.default_rng(6)
    for _ in range(50):
        t = retrieval_map(mem, rs.normal(size=12) * 3, float(rs.uniform(0.1, 100)))
        assert np.linalg.norm(t) <= mem.max_norm + 1e-12


def test_fixed_point_iteration_converges_to_nearest_pattern():
    # at beta = 1000 the damped fixed-point iteration started near a pattern
    # locks onto it almost exactly
    mem = make_random_sphere_memory(64, 16, seed=7)
    xi = mem.columns[:, 3] + 0.05 * np.random.default_rng(8).normal(size=64)
    for _ in range(500):
        xi = retrieval_map(mem, xi, 1000.0)
    cos = float(mem.columns[:, 3] @ xi / np.linalg.norm(xi))
    assert cos > 0.999


# ---------------------------------------------------------------------------
# energy

def test_energy_single_pattern_at_itself():
    mem = memory_from_columns(np.array([[1.0], [0.0]]))
    for beta in (0.5, 3.0, 100.0):
        val = energy(mem, np.array([1.0, 0.0]), beta)
        assert abs(val.reduced - (-0.5)) < 1e-12
        assert abs(val.full) < 1e-12


def test_energy_reduced_full_offset():
    mem = make_random_sphere_memory(10, 6, seed=9)
    val = energy(mem, np.ones(10), 2.5)
    offset = np.log(6) / 2.5 + 0.5
    assert abs(val.full - val.reduced - offset) < 1e-12


def test_energy_lower_bound_large_norm():
    mem = make_random_sphere_memory(10, 4, seed=10)
    xi = np.ones(10) / np.sqrt(10) * 3.0
    assert energy(mem, xi, 5.0).full >= 0.5 * (3.0 - 1.0) ** 2 - 1e-12


def test_energy_lower_bound_random_points():
    rs = np.random.default_rng(11)
    mem = make_random_sphere_memory(8, 5, seed=12)
    for _ in range(1000):
        xi = rs.normal(size=8) * rs.uniform(0.1, 5)
        beta = float(rs.uniform(0.05, 200))
        full = energy(mem, xi, beta).full
        bound = 0.5 * (np.linalg.norm(xi) - mem.max_norm) ** 2
        assert full >= bound - 1e-10


# ---------------------------------------------------------------------------
# gradient

def test_gradient_zero_at_fixed_point():
    mem = make_random_sphere_memory(16, 4, seed=13)
    xi = mem.columns[:, 0].copy()
    for _ in range(2000):
        xi = retrieval_map(mem, xi, 50.0)
    assert np.linalg.norm(energy_gradient(mem, xi, 50.0)) < 1e-10


def test_gradient_matches_finite_differences():
    rs = np.random.default_rng(14)
    mem = make_random_sphere_memory(8, 4, seed=15)
    for _ in range(10):
        xi = rs.normal(size=8)
        g = energy_gradient(mem, xi, 5.0)
        assert np.max(np.abs(g - fd_gradient(mem, xi, 5.0))) < 1e-6


def test_gradient_small_beta_limit():
    mem = make_random_sphere_memory(12, 5, seed=16)
    xi = np.random.default_rng(17).normal(size=12)
    g = energy_gradient(mem, xi, 1e-13)
    assert np.max(np.abs(g - (xi - mem.columns.mean(axis=1)))) < 1e-9


def test_dissipativity_random_points():
    rs = np.random.default_rng(18)
    mem = make_random_sphere_memory(6, 4, seed=19)
    for _ in range(1000):
        xi = rs.normal(size=6) * rs.uniform(0.1, 4)
        beta = float(rs.uniform(0.05, 100))
        lhs = float(energy_gradient(mem, xi, beta) @ xi)
        rhs = 0.5 * float(xi @ xi) - 0.5 * mem.max_norm ** 2
        assert lhs >= rhs - 1e-10


# ---------------------------------------------------------------------------
# entropy derivative

def test_entropy_derivative_zero_cases():
    mem = make_random_sphere_memory(8, 4, seed=20)
    st = attention(mem, np.ones(8), 1.0)
    assert entropy_derivative(st, 0.0) == 0.0
    uniform = memory_from_columns(np.tile(np.eye(4)[:, :1], (1, 3)))
    st2 = attention(uniform, np.ones(4), 2.0)
    assert abs(entropy_derivative(st2, 2.0)) < 1e-20


def test_entropy_derivative_matches_fd():
    rs = np.random.default_rng(21)
    for _ in range(10):
        mem, xi = random_instance(rs)
        beta = float(rs.uniform(0.5, 10))
        h = 1e-4
        hp = attention(mem, xi, beta + h).entropy
        hm = attention(mem, xi, beta - h).entropy
        fd = (hp - hm) / (2 * h)
        analytic = entropy_derivative(attention(mem, xi, beta), beta)
        assert abs(analytic - fd) <= 1e-6 * max(abs(analytic), 1e-9)


def test_entropy_monotone_in_beta():
    mem = make_random_sphere_memory(24, 9, seed=22)
    xi = np.random.default_rng(23).normal(size=24)
    hs = [attention(mem, xi, b).entropy for b in np.logspace(-2, 3, 40)]
    assert np.all(np.diff(hs) <= 1e-12)


# ---------------------------------------------------------------------------
# regularity constants

def test_regularity_formulas_and_flags():
    mem = make_random_sphere_memory(8, 4, seed=24)
    rc = regularity_constants(mem, 1e-9)
    assert abs(rc.lipschitz - 1.0) < 1e-8 and rc.convex
    scaled = memory_from_columns(np.eye(2) * np.sqrt(2.0))
    rc2 = regularity_constants(scaled, 1.0)  # sigma_max^2 = 2 exactly
    assert abs(rc2.convexity_margin) < 1e-12
    assert not rc2.convex
    assert rc2.dissipativity_a == 0.5
    assert abs(rc2.dissipativity_b - 1.0) < 1e-12


def test_fd_hessian_spectral_norm_below_lipschitz():
    rs = np.random.default_rng(25)
    mem = make_random_sphere_memory(6, 4, seed=26)
    for _ in range(20):
        beta = float(rs.uniform(0.1, 20))
        xi = rs.normal(size=6) * rs.uniform(0.2, 2)
        hess = fd_hessian(mem, xi, beta)
        spec = np.linalg.norm(hess, ord=2)
        assert spec <= regularity_constants(mem, beta).lipschitz + 1e-5


def test_softmax_jacobian_spectral_bound_half():
    rs = np.random.default_rng(27)
    for _ in range(200):
        logits = rs.normal(size=6) * rs.uniform(0.1, 8)
        p = softmax(logits)
        s = np.diag(p) - np.outer(p, p)
        assert np.linalg.eigvalsh(s).max() <= 0.5 + 1e-12
    # the bound is tight at a two-point half-half mass
    p = np.array([0.5, 0.5, 0.0, 0.0])
    s = np.diag(p) - np.outer(p, p)
    assert abs(np.linalg.eigvalsh(s).max() - 0.5) < 1e-12


def test_entropy_of_zero_convention():
    assert entropy_of(np.array([1.0, 0.0, 0.0])) == 0.0
