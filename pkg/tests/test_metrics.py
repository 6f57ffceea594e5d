import numpy as np
import pytest

from salab import make_random_sphere_memory
from salab.dataio import Alignment
from salab.memory import memory_from_columns
from salab.metrics import (acf, aa_counts, aggregate_report, categorical_kl,
                           concentration, diversity, frechet_diagonal,
                           frobenius_correlation_error, ks_two_sample, max_cos,
                           mean_energy, mi_correlation, mi_matrix, novelty,
                           per_position_kl, sequence_identity, summarize,
                           white_noise_band)
from salab.energy import attention


def brute_force_ks(a, b):
    # evaluate both step CDFs on the pooled support directly
    a, b = np.asarray(a, float), np.asarray(b, float)
    best = 0.0
    for x in np.concatenate([a, b]):
        fa = np.mean(a <= x)
        fb = np.mean(b <= x)
        best = max(best, abs(fa - fb))
    return best


# ---------------------------------------------------------------------------
# cosine metrics

def test_novelty_stored_pattern_zero():
    mem = make_random_sphere_memory(16, 5, seed=1)
    assert abs(novelty(mem, mem.columns[:, 2])) < 1e-12


def test_novelty_orthogonal():
    mem = memory_from_columns(np.eye(4)[:, :2])
    assert abs(novelty(mem, np.array([0.0, 0.0, 1.0, 0.0])) - 1.0) < 1e-12


def test_novelty_scale_invariant_and_zero_rejected():
    mem = make_random_sphere_memory(8, 3, seed=2)
    x = np.random.default_rng(3).normal(size=8)
    assert abs(novelty(mem, x) - novelty(mem, 17.5 * x)) < 1e-12
    with pytest.raises(ValueError):
        novelty(mem, np.zeros(8))
    assert 0.0 <= novelty(mem, x) <= 2.0


def test_diversity_edges():
    x = np.ones((4, 6))
    assert diversity(x) == 0.0
    pair = np.array([[1.0, 0.0], [0.0, 1.0]])
    assert abs(diversity(pair) - 1.0) < 1e-12
    with pytest.raises(ValueError):
        diversity(np.ones((1, 3)))


def test_mean_energy_stored_patterns():
    mem = make_random_sphere_memory(64, 16, seed=4)
    val = mean_energy(mem, mem.columns.T, 2000.0)
    assert abs(val - (-0.5)) < 1e-3


def test_max_cos_and_concentration():
    mem = make_random_sphere_memory(12, 4, seed=5)
    assert abs(max_cos(mem, mem.columns[:, 0]) - 1.0) < 1e-12
    st = attention(mem, mem.columns[:, 0], 1e-12)
    assert abs(concentration(st, 4)) < 1e-6          # uniform limit
    st_hi = attention(mem, mem.columns[:, 0], 1e6)
    assert concentration(st_hi, 4) > 0.999           # point mass
    assert concentration(st, 1) == 1.0


# ---------------------------------------------------------------------------
# KS

def test_ks_identical_and_disjoint():
    assert ks_two_sample([1, 2, 3], [1, 2, 3]) == (0.0, 1.0)
    stat, p = ks_two_sample(np.zeros(5), np.ones(5))
    assert stat == 1.0 and p < 0.1


def test_ks_brute_force_oracle():
    stat, _ = ks_two_sample([1, 2, 3], [1.5, 2.5, 3.5])
    assert abs(stat - 1.0 / 3.0) < 1e-12
    rs = np.random.default_rng(6)
    for _ in range(20):
        a = rs.normal(size=rs.integers(2, 30))
        b = rs.normal(size=rs.integers(2, 30)) + rs.uniform(-1, 1)
        stat, _ = ks_two_sample(a, b)
        assert abs(stat - brute_force_ks(a, b)) < 1e-12


def test_ks_symmetry_and_bounds():
    rs = np.random.default_rng(7)
    a, b = rs.normal(size=40), rs.normal(size=25)
    sa, pa = ks_two_sample(a, b)
    sb, pb = ks_two_sample(b, a)
    assert sa == sb and pa == pb
    assert 0.0 <= sa <= 1.0 and 0.0 <= pa <= 1.0
    with pytest.raises(ValueError):
        ks_two_sample([], [1.0])


def test_ks_pvalue_against_scipy_asymptotic():
    import scipy.stats as st
    rs = np.random.default_rng(8)
    a = rs.normal(size=300)
    b = rs.normal(size=400) * 1.15
    stat, p = ks_two_sample(a, b)
    ref = st.ks_2samp(a, b, method="asymp")
    assert abs(stat - ref.statistic) < 1e-12
    assert abs(p - ref.pvalue) < 0.02


# ---------------------------------------------------------------------------
# categorical divergences

def test_categorical_kl_zero_and_limit():
    p = np.array([3.0, 1.0, 2.0])
    assert categorical_kl(p, p, 0.5) == 0.0
    point = np.zeros(20)
    point[4] = 1.0
    uniform = np.ones(20)
    val = categorical_kl(point, uniform, pseudocount=1e-9)
    assert abs(val - np.log(20)) < 1e-3


def test_categorical_kl_validation():
    with pytest.raises(ValueError):
        categorical_kl(np.ones(3), np.ones(4))
    with pytest.raises(ValueError):
        categorical_kl(np.ones(3), np.ones(3), pseudocount=0.0)


def test_per_position_kl_identity_and_shuffle_control():
    rows = ("ACDEF", "ACDFG", "AMDEF", "ACWEF")
    a = Alignment(("a", "b", "c", "d"), rows)
    assert per_position_kl(a, a) == 0.0
    # bootstrap replay (resample with replacement) stays closer than a
    # column-shuffled control
    rs = np.random.default_rng(9)
    boot = Alignment(tuple("b%d" % i for i in range(8)),
                     tuple(rows[i] for i in rs.integers(0, 4, size=8)))
    cols = np.array([list(r) for r in rows])
    shuffled_cols = cols[:, rs.permutation(5)]
    for _ in range(3):
        rs.shuffle(shuffled_cols, axis=0)
    shuf = Alignment(tuple("s%d" % i for i in range(4)),
                     tuple("".join(r) for r in shuffled_cols))
    assert per_position_kl(a, boot) < per_position_kl(a, shuf)


def test_aa_counts_skips_gaps():
    a = Alignment(("x",), ("A-C",))
    counts = aa_counts(a)
    assert counts.sum() == 2
    assert counts[0] == 1 and counts[1] == 1  # A and C


def test_mi_matrix_properties():
    # sample count must dwarf the 400 joint cells for the plug-in estimate
    # of independent columns to approach zero (bias ~ 399/2K)
    rs = np.random.default_rng(10)
    alphabet = "ACDEFGHIKLMNPQRSTVWY"
    rows = tuple("".join(alphabet[i] for i in rs.integers(0, 20, size=4))
                 for _ in range(20000))
    a = Alignment(tuple(map(str, range(len(rows)))), rows)
    m = mi_matrix(a, pseudocount=1e-6)
    assert np.allclose(m, m.T)
    assert np.all(m >= -1e-12)
    assert np.all(np.diag(m) == 0.0)
    assert m[np.triu_indices(4, 1)].mean() < 0.03
    assert abs(mi_correlation(m, m) - 1.0) < 1e-12


def test_mi_correlation_bounds_and_validation():
    rs = np.random.default_rng(11)
    a = np.abs(rs.normal(size=(5, 5)))
    a = (a + a.T) / 2
    np.fill_diagonal(a, 0.0)
    b = np.abs(rs.normal(size=(5, 5)))
    b = (b + b.T) / 2
    np.fill_diagonal(b, 0.0)
    r = mi_correlation(a, b)
    assert -1.0 <= r <= 1.0
    with pytest.raises(ValueError):
        mi_correlation(a, b[:4, :4])


def test_sequence_identity():
    a = Alignment(("x", "y"), ("ACDE", "WWWW"))
    assert sequence_identity("ACDE", a) == 1.0
    assert sequence_identity("ACDW", a) == 0.75
    assert sequence_identity("AC-E", a) == 1.0  # gaps skipped


# ---------------------------------------------------------------------------
# time series and matrices

def test_acf_alternating_series():
    x = np.tile([1.0, -1.0], 50)
    assert abs(acf(x, 1)[0] + 1.0) < 0.03


def test_acf_zero_variance_error_and_validation():
    with pytest.raises(ValueError):
        acf(np.ones(50), 3)
    with pytest.raises(ValueError):
        acf(np.arange(5.0), 5)


def test_acf_white_noise_band_coverage():
    # Monte-Carlo sanity: iid Gaussians stay inside the 99% band at >= 95%
    # of the first 20 lags
    rs = np.random.default_rng(12)
    x = rs.normal(size=2766)
    band = white_noise_band(2766)
    vals = acf(x, 20)
    assert np.mean(np.abs(vals) <= band) >= 0.95
    with pytest.raises(ValueError):
        white_noise_band(100, confidence=0.5)


def test_frobenius_correlation_error_cases():
    eye = np.eye(4)
    assert frobenius_correlation_error(eye, eye) == 0.0
    gen = np.eye(4)  # zero off-diagonal, unit diagonal
    assert frobenius_correlation_error(eye, gen) == 0.0
    rs = np.random.default_rng(13)
    h, g = rs.normal(size=(4, 4)), rs.normal(size=(4, 4))
    direct = np.sqrt(sum((h[i, j] - g[i, j]) ** 2 for i in range(4) for j in range(4)))
    direct /= np.sqrt(sum(h[i, j] ** 2 for i in range(4) for j in range(4)))
    assert abs(frobenius_correlation_error(h, g) - direct * 100) < 1e-9


def test_frechet_diagonal_zero_on_identical_sets():
    rs = np.random.default_rng(14)
    x = rs.normal(size=(30, 6))
    assert frechet_diagonal(x, x) == 0.0
    assert frechet_diagonal(x, x + 1.0) > 0.0


# ---------------------------------------------------------------------------
# aggregation

def test_summarize_single_chain():
    e = summarize("m", [0.7])
    assert (e.mean, e.se, e.n) == (0.7, 0.0, 1)


def test_summarize_equal_means():
    e = summarize("m", [0.5, 0.5, 0.5])
    assert e.se == 0.0 and e.n == 3


def test_summarize_matches_direct_formula():
    rs = np.random.default_rng(15)
    vals = rs.normal(size=30)
    e = summarize("m", vals)
    assert abs(e.mean - vals.mean()) < 1e-15
    assert abs(e.se - vals.std(ddof=1) / np.sqrt(30)) < 1e-15
    assert e.n == 30


def test_aggregate_report_lookup():
    rep = aggregate_report({"novelty": [0.1, 0.2], "energy": [1.0, 2.0, 3.0]})
    assert rep["novelty"].n == 2
    assert rep.names() == ["novelty", "energy"]
    with pytest.raises(KeyError):
        rep["missing"]


def test_report_serialization_forms():
    from salab.metrics import report_dict, report_rows
    rep = aggregate_report({"novelty": [0.1, 0.3]})
    header, rows = report_rows(rep)
    assert header == ["metric", "mean", "se", "n"]
    assert rows[0][0] == "novelty" and rows[0][3] == 2
    d = report_dict(rep)
    assert abs(d["novelty"]["mean"] - 0.2) < 1e-15


def test_mi_matrix_recovers_coupled_positions():
    # two co-varying columns in an otherwise independent alignment must
    # carry the largest off-diagonal mutual information
    rs = np.random.default_rng(16)
    alphabet = "ACDEFGHIKLMNPQRSTVWY"
    rows = []
    for _ in range(4000):
        chars = [alphabet[i] for i in rs.integers(0, 20, size=5)]
        chars[3] = chars[1]  # position 3 copies position 1
        rows.append("".join(chars))
    a = Alignment(tuple(map(str, range(len(rows)))), tuple(rows))
    m = mi_matrix(a, pseudocount=0.01)
    iu = np.triu_indices(5, k=1)
    pairs = list(zip(iu[0], iu[1]))
    best = pairs[int(np.argmax(m[iu]))]
    assert best == (1, 3)
    assert m[1, 3] > 2.0  # near log 20 for a perfect copy
    others = [m[i, j] for i, j in pairs if (i, j) != (1, 3)]
    assert max(others) < 0.5
