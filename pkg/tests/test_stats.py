import math

import numpy as np
import pytest
from scipy import stats as sps

from graph_coupler.laws import exponential_law
from graph_coupler.stats import (
    EmpiricalMeasure,
    W1_ORACLE_CAP,
    conditional_poisson_uniform,
    loglog_slope,
    pearson_interval,
    poisson_cdf_pair,
    poisson_inverse,
    w1_exact_discrete,
    w1_quantile,
    wilson_interval,
)


# --- poisson_inverse -------------------------------------------------------

@pytest.mark.parametrize("lam", [0.0, 0.3, 1.0, 7.5])
def test_poisson_inverse_at_zero(lam):
    assert poisson_inverse(0.0, lam) == 0


def test_poisson_inverse_half_at_one():
    # G(0;1) = e^-1 < 0.5 <= G(1;1) = 2 e^-1
    assert poisson_inverse(0.5, 1.0) == 1


def test_poisson_inverse_boundary():
    assert poisson_inverse(math.exp(-2.0) - 1e-12, 2.0) == 0


def test_poisson_inverse_negative_mean():
    with pytest.raises(ValueError):
        poisson_inverse(0.3, -1.0)
    with pytest.raises(ValueError):
        poisson_inverse(np.array([0.3]), np.array([-1.0]))


def test_poisson_inverse_matches_scipy_ppf():
    rng = np.random.default_rng(1)
    u = rng.random(2000)
    for lam in (0.05, 1.0, 12.0, 250.0):
        got = poisson_inverse(u, lam)
        want = sps.poisson.ppf(u, lam).astype(np.int64)
        # ties at exact CDF values are measure-zero; allow none on random input
        assert np.array_equal(got, want)


def test_poisson_inverse_scalar_and_vector_agree():
    rng = np.random.default_rng(2)
    u = rng.random(300)
    lam = rng.exponential(3.0, 300)
    vec = poisson_inverse(u, lam)
    assert [poisson_inverse(float(a), float(b)) for a, b in zip(u, lam)] == vec.tolist()


def test_poisson_inverse_monotone():
    us = np.linspace(0, 1, 401, endpoint=False)
    lams = np.linspace(0, 30, 121)
    grid = poisson_inverse(us[:, None], lams[None, :])
    assert np.all(np.diff(grid, axis=0) >= 0)
    assert np.all(np.diff(grid, axis=1) >= 0)


@pytest.mark.parametrize("lam", [0.1, 1.0, 10.0, 100.0])
def test_poisson_inverse_moments(lam):
    n = 10 ** 7
    rng = np.random.default_rng(int(lam * 10))
    z = poisson_inverse(rng.random(n), lam)
    mean_sd = math.sqrt(lam / n)
    # Var of the sample variance of a Poisson: (mu4 - sigma^4) / n with mu4 = lam (1 + 3 lam)
    var_sd = math.sqrt((lam * (1 + 3 * lam) - lam * lam) / n)
    assert abs(z.mean() - lam) <= 4 * mean_sd
    assert abs(z.var() - lam) <= 4 * var_sd


def test_monotone_coupling_mean_gap():
    # E|G^-1(U; lam) - G^-1(U; mu)| = lam - mu for lam >= mu
    rng = np.random.default_rng(3)
    u = rng.random(10 ** 6)
    for lam, mu in ((2.0, 1.5), (5.0, 0.2), (0.4, 0.4)):
        a, b = poisson_inverse(u, lam), poisson_inverse(u, mu)
        assert np.all(a >= b)
        gap = (a - b).astype(float)
        sd = gap.std() / math.sqrt(u.size)
        assert abs(gap.mean() - (lam - mu)) <= 4 * sd + 1e-12


def test_conditional_poisson_uniform_inverts():
    rng = np.random.default_rng(4)
    for _ in range(500):
        lam = rng.exponential(4.0)
        m = int(rng.poisson(lam))
        u = conditional_poisson_uniform(m, lam, rng.random())
        assert 0.0 < u <= 1.0
        assert poisson_inverse(u, lam) == m


def test_conditional_poisson_uniform_is_uniform_overall():
    # drawing m from G^-1(U) then U | m reproduces a uniform
    rng = np.random.default_rng(5)
    lam = 1.7
    m = poisson_inverse(rng.random(20000), lam)
    u = np.array([conditional_poisson_uniform(int(k), lam, rng.random()) for k in m])
    assert sps.kstest(u, "uniform").pvalue > 1e-3


def test_poisson_cdf_pair_values():
    lo, hi = poisson_cdf_pair(2, 1.0)
    assert lo == pytest.approx(2 * math.exp(-1), rel=1e-14)
    assert hi == pytest.approx(2.5 * math.exp(-1), rel=1e-14)


# --- Wasserstein ---------------------------------------------------------

def test_w1_identical_samples():
    a = np.array([3.0, 1.0, 2.0, 2.0])
    assert w1_quantile(a, a[::-1]) == 0.0


def test_w1_sorted_pairing_example():
    assert w1_quantile([1.0, 3.0], [2.0, 2.0]) == pytest.approx(1.0)


def test_w1_point_mass_against_exponential():
    # integral of -ln(1-u) over (0, 1) is 1
    assert w1_quantile([0.0], exponential_law(1.0)) == pytest.approx(1.0, abs=1e-12)


def test_w1_empty_sample():
    with pytest.raises(ValueError):
        w1_quantile([], [1.0])


def test_w1_unequal_sizes_by_hand():
    # {0, 1} vs {0, 0, 3}: quantile gaps 0 on (0,1/2), 1 on (1/2,2/3), 2 on (2/3,1)
    assert w1_quantile([0.0, 1.0], [0.0, 0.0, 3.0]) == pytest.approx(1 / 6 + 2 / 3)


def test_w1_weighted_measure():
    a = EmpiricalMeasure.of([0.0, 10.0], [0.9, 0.1])
    assert w1_quantile(a, [0.0]) == pytest.approx(1.0)


def test_w1_sample_against_discrete_law_matches_sample_merge():
    from graph_coupler.laws import DiscreteLaw
    law = DiscreteLaw([0, 1, 4], [0.25, 0.5, 0.25])
    sample = np.array([0.0, 2.0, 2.0, 5.0, 1.0])
    # the law equals the empirical law of [0, 1, 1, 4]
    assert w1_quantile(sample, law) == pytest.approx(w1_quantile(sample, [0.0, 1.0, 1.0, 4.0]), abs=1e-12)


def test_w1_triangle_inequality():
    rng = np.random.default_rng(6)
    for _ in range(200):
        a, b, c = (rng.normal(size=rng.integers(1, 30)) for _ in range(3))
        assert w1_quantile(a, c) <= w1_quantile(a, b) + w1_quantile(b, c) + 1e-12


def test_w1_exact_zero_on_equal():
    a = np.array([0.5, 2.0, 7.0])
    assert w1_exact_discrete(a, a) == pytest.approx(0.0, abs=1e-12)


def test_w1_exact_metric_example():
    a = EmpiricalMeasure.of([0.0, 1.0], [0.5, 0.5])
    b = EmpiricalMeasure.of([0.0, 1.0], [1.0, 0.0])
    assert w1_exact_discrete(a, b, metric=[[0, 1], [1, 0]]) == pytest.approx(0.5, abs=1e-9)


def test_w1_exact_cap():
    with pytest.raises(ValueError):
        w1_exact_discrete(np.zeros(W1_ORACLE_CAP + 1), np.zeros(3))


def test_w1_exact_multidimensional_l1():
    # two points each; the optimal plan swaps nothing: cost (|1|+|1|)/2 per point
    a = np.array([[0.0, 0.0], [5.0, 5.0]])
    b = np.array([[1.0, 1.0], [6.0, 6.0]])
    assert w1_exact_discrete(a, b) == pytest.approx(2.0, abs=1e-9)


def test_w1_exact_agrees_with_quantile_small():
    rng = np.random.default_rng(7)
    for _ in range(30):
        a = rng.exponential(size=rng.integers(1, 20))
        b = rng.exponential(size=rng.integers(1, 20))
        assert abs(w1_exact_discrete(a, b) - w1_quantile(a, b)) <= 1e-9


# --- intervals -------------------------------------------------------------

def test_wilson_lower_boundary():
    lo, hi = wilson_interval(0, 10, 0.95)
    assert lo == 0.0 and 0 < hi < 1


def test_wilson_upper_boundary():
    lo, hi = wilson_interval(10, 10, 0.95)
    assert hi == 1.0 and 0 < lo < 1


def test_wilson_symmetric_half():
    lo, hi = wilson_interval(5, 10, 0.95)
    assert lo < 0.5 < hi
    assert (0.5 - lo) == pytest.approx(hi - 0.5, abs=1e-12)
    # closed form: centre 1/2, half-width z sqrt(1/40 + z^2/400) / (1 + z^2/10)
    z = 1.959963984540054
    assert hi - 0.5 == pytest.approx(z * math.sqrt(0.025 + z * z / 400) / (1 + z * z / 10), rel=1e-9)


@pytest.mark.parametrize("args", [(1, 0, 0.95), (3, 2, 0.95), (1, 5, 1.0), (1, 5, 0.0)])
def test_wilson_rejects_bad_input(args):
    with pytest.raises(ValueError):
        wilson_interval(*args)


def test_pearson_interval_contains_truth():
    rng = np.random.default_rng(8)
    x = rng.normal(size=5000)
    y = 0.6 * x + 0.8 * rng.normal(size=5000)
    r, lo, hi = pearson_interval(x, y)
    assert lo < 0.6 < hi and lo < r < hi


def test_loglog_slope_exact_power():
    xs = np.array([1.0, 10.0, 100.0])
    assert loglog_slope(xs, 3 * xs ** -0.5) == pytest.approx(-0.5)
