import math
from fractions import Fraction

import numpy as np
import pytest

from betticlt.er import (
    ERConfig,
    FVector,
    cov_f,
    exact_var_tilde_beta,
    f_vector,
    mean_f,
    morse_bounds,
    regime_bounds,
    regime_check,
    sample_er_graph,
    sigma2_asymptotic,
    stein_rate,
    tilde_beta,
)
from betticlt.homology import betti_numbers, euler_characteristic
from betticlt.oracles import brute_clique_count
from betticlt.simplicial import Graph, build_clique_complex

from conftest import cycle_graph, random_graph


def test_config_validation():
    with pytest.raises(ValueError):
        ERConfig(10, 1.5)
    with pytest.raises(ValueError):
        ERConfig(10, 0.5, k=0)
    with pytest.raises(ValueError):
        ERConfig(10, 0.5, delta=0)


def test_extreme_p():
    assert sample_er_graph(ERConfig(7, 1.0)) == Graph.complete(7)
    assert sample_er_graph(ERConfig(7, 0.0)).edge_count() == 0


def test_mean_edge_count():
    counts = np.array([sample_er_graph(ERConfig(30, 0.5, seed=s)).edge_count() for s in range(2000)])
    se = counts.std(ddof=1) / math.sqrt(len(counts))
    assert abs(counts.mean() - 217.5) <= 3 * se


def test_sampling_is_seeded():
    a = sample_er_graph(ERConfig(40, 0.3, seed=9))
    assert a == sample_er_graph(ERConfig(40, 0.3, seed=9))
    assert a != sample_er_graph(ERConfig(40, 0.3, seed=10))


def test_f_vector_small_graphs():
    assert tuple(f_vector(Graph.complete(4))) == (4, 6, 4, 1)
    assert tuple(f_vector(cycle_graph(5))) == (5, 5)
    assert tuple(f_vector(Graph(0, ()))) == ()
    with pytest.raises(ValueError):
        f_vector(Graph.complete(10), cap=5)


def test_f_vector_matches_brute_force(rng):
    for _ in range(15):
        g = random_graph(rng, 12, float(rng.uniform(0.2, 0.8)))
        f = f_vector(g)
        for i in range(12):
            assert f[i] == brute_clique_count(g, i + 1)


def test_tilde_beta_examples():
    assert tilde_beta(FVector((4, 6, 4, 1)), 1) == -1
    assert tilde_beta((3, 3), 1) == 0
    assert morse_bounds((4, 6, 4, 1), 1) == (-2, 6)
    assert morse_bounds((3, 3), 1) == (0, 3)


def test_alternating_identity_and_morse(rng):
    for _ in range(30):
        g = random_graph(rng, int(rng.integers(3, 25)), float(rng.uniform(0.2, 0.7)))
        f = f_vector(g)
        top = max(len(f), 3)
        betti = betti_numbers(build_clique_complex(g, top), top - 1)
        for k in (1, 2):
            assert tilde_beta(f, k) == (-1) ** k * euler_characteristic(f)
            lo, hi = morse_bounds(f, k)
            assert lo <= betti[k] <= hi


def test_mean_f_examples():
    assert mean_f(3, 0.5, 1).value == 1.5
    assert mean_f(4, Fraction(1), 2).value == 4
    assert mean_f(4, 1.0, 2).value == 4.0
    assert mean_f(3, 0.5, 5).value == 0.0


def test_cov_f_closed_forms():
    for p in (Fraction(1, 4), Fraction(1, 2), Fraction(2, 3)):
        assert cov_f(3, p, 1, 1).value == 3 * p * (1 - p)
        assert cov_f(3, p, 2, 2).value == p ** 3 - p ** 6
        assert cov_f(5, p, 0, 2).value == 0
        assert cov_f(6, p, 2, 1).value == cov_f(6, p, 1, 2).value


def test_float_moments_agree_with_exact():
    for n in (6, 9, 15):
        for p in (Fraction(1, 4), Fraction(3, 5)):
            for a in range(4):
                for b in range(4):
                    ex = float(cov_f(n, p, a, b).value)
                    fl = cov_f(n, float(p), a, b).value
                    assert fl == pytest.approx(ex, rel=1e-10, abs=1e-300)
            for k in (1, 2):
                ex = float(exact_var_tilde_beta(n, p, k).value)
                assert exact_var_tilde_beta(n, float(p), k).value == pytest.approx(ex, rel=1e-9)


def test_exact_var_edge_cases():
    assert exact_var_tilde_beta(20, 0.0, 1).value == 0.0
    assert exact_var_tilde_beta(20, 1e-12, 1).value < 1e-9
    with pytest.raises(ValueError):
        exact_var_tilde_beta(200_000, 0.001, 1)
    v = exact_var_tilde_beta(5000, 5000 ** -0.6, 1)
    assert v.mode == "exact" and math.isfinite(v.value) and v.value > 0


def test_exact_var_against_monte_carlo():
    n = 1000
    p = n ** -0.6
    vals = [tilde_beta(f_vector(sample_er_graph(ERConfig(n, p, seed=s))), 1) for s in range(400)]
    ratio = np.var(vals, ddof=1) / exact_var_tilde_beta(n, p, 1).value
    assert 0.8 <= ratio <= 1.25


def test_asymptotic_and_rate():
    s = sigma2_asymptotic(100, 0.1, 1)
    assert s.mode == "asymptotic-order"
    assert s.value == pytest.approx(100 ** 2 * 0.1)
    assert sigma2_asymptotic(100, 0.1, 2).value == pytest.approx(100 ** 4 * 0.1 ** 5)
    assert stein_rate(100, 0.04, 1) == pytest.approx(0.05)
    with pytest.raises(ValueError):
        stein_rate(100, 0.04, 1, c=0)


def test_regime():
    lo, hi = regime_bounds(1e4, 1, 0.05)
    assert lo == pytest.approx(10 ** -3.8) and hi == pytest.approx(10 ** -2.2)
    assert regime_check(1e4, 1e-3, 1, 0.05) == "inside"
    assert regime_check(1e4, 0.5, 1, 0.05) == "above"
    assert regime_check(1e4, 1e-4, 1, 0.05) == "below"
    with pytest.raises(ValueError):
        regime_check(100, 0.1, 1, 0)


def test_moments_vanish_for_faces_larger_than_n():
    for p in (Fraction(1, 2), 0.5):
        assert mean_f(2, p, 3).value == 0
        assert cov_f(2, p, 3, 1).value == 0
        assert cov_f(3, p, 3, 3).value == 0
