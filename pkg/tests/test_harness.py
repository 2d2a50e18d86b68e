import math

import numpy as np
import pytest
from scipy import integrate, stats

from betticlt.harness import (
    CechTrial,
    ERTrial,
    column,
    grouped_jackknife_se,
    ks_normal,
    rate_regression,
    run_trials,
    standardize,
    summarize,
    wasserstein1_normal,
)
from betticlt.rng import derive_seed


def test_derive_seed_stable_and_distinct():
    assert derive_seed(1, 0) == derive_seed(1, 0)
    seeds = {derive_seed(1, i) for i in range(1000)}
    assert len(seeds) == 1000
    assert derive_seed(1, 0) != derive_seed(2, 0)


def test_run_trials_order_and_worker_independence():
    cfg = ERTrial(40, 0.2)
    a = run_trials(cfg, 6, 3, workers=1)
    b = run_trials(cfg, 6, 3, workers=2)
    assert [r.trial_index for r in a] == list(range(6))
    assert [(r.seed, r.statistics) for r in a] == [(r.seed, r.statistics) for r in b]
    with pytest.raises(ValueError):
        run_trials(cfg, 0, 3)


def test_trial_errors_carry_index():
    with pytest.raises(RuntimeError, match="trial 0"):
        run_trials(CechTrial(10, -1.0), 1, 0)


def test_er_statistics_identities():
    recs = run_trials(ERTrial(60, 0.15, k=2), 10, 0)
    for name in ("alt_identity_ok", "euler_ok", "offset_ok", "morse_ok"):
        assert column(recs, name).all()


def test_cech_statistics_invariants():
    recs = run_trials(CechTrial(200, 0.04), 5, 0)
    assert column(recs, "decomposition_ok").all()
    assert (column(recs, "nerve_max") == 0).all()


def test_summarize_matches_scipy(rng):
    x = rng.gamma(2.0, size=500)
    s = summarize(x)
    assert s.mean == pytest.approx(x.mean())
    assert s.variance == pytest.approx(x.var(ddof=1))
    assert s.skewness == pytest.approx(stats.skew(x, bias=False))
    assert s.excess_kurtosis == pytest.approx(stats.kurtosis(x, bias=False))
    assert s.se_mean == pytest.approx(x.std(ddof=1) / math.sqrt(500), rel=1e-9)


def test_summarize_jackknife_against_brute_force(rng):
    x = rng.normal(size=40)
    s = summarize(x)
    loo = np.array([stats.skew(np.delete(x, i), bias=False) for i in range(40)])
    se = math.sqrt(39 / 40 * ((loo - loo.mean()) ** 2).sum())
    assert s.se_skewness == pytest.approx(se, rel=1e-8)


def test_summarize_small_and_constant():
    s = summarize([0, 2])
    assert s.mean == 1 and s.variance == 2
    c = summarize([3.0] * 10)
    assert c.variance == 0 and math.isnan(c.skewness)
    with pytest.raises(ValueError):
        summarize([1.0])


def test_ks_and_w1_reference_values():
    assert ks_normal([0.0]) == pytest.approx(0.5)
    assert wasserstein1_normal([0.0]) == pytest.approx(math.sqrt(2 / math.pi))
    grid = stats.norm.ppf((np.arange(1000) + 0.5) / 1000)
    assert ks_normal(grid) == pytest.approx(0.0005, abs=1e-9)
    assert wasserstein1_normal(grid) < 0.003


def test_w1_matches_numerical_integral(rng):
    x = rng.normal(0.3, 1.2, size=30)
    t = np.linspace(-12, 12, 400_001)
    ecdf = np.searchsorted(np.sort(x), t, side="right") / len(x)
    num = integrate.trapezoid(np.abs(ecdf - stats.norm.cdf(t)), t)
    assert wasserstein1_normal(x) == pytest.approx(num, abs=1e-4)


def test_ks_matches_scipy(rng):
    x = rng.normal(size=300)
    assert ks_normal(x) == pytest.approx(stats.kstest(x, "norm").statistic)


def test_standardize_and_regression():
    assert list(standardize([1, 3], 2, 1)) == [-1, 1]
    with pytest.raises(ValueError):
        standardize([1], 0, 0)
    slope, intercept, r2 = rate_regression([(0, 1), (1, 3), (2, 5)])
    assert (slope, intercept, r2) == pytest.approx((2, 1, 1))
    with pytest.raises(ValueError):
        rate_regression([(0, 1), (0, 2), (1, 1)])


def test_grouped_jackknife_of_mean(rng):
    x = rng.normal(size=2000)
    se = grouped_jackknife_se(x, np.mean, groups=50)
    assert se == pytest.approx(1 / math.sqrt(2000), rel=0.3)
