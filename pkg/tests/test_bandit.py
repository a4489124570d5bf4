import math
import random

import pytest
from hypothesis import given, strategies as st
from scipy import integrate, stats

from beltamp.bandit import (P_FLOOR, BetaPrior, OutcomeCounts, bayes_ucb_cost, beta_entropy,
                            beta_quantile, ucb_cost, ucb_level)


def test_uniform_quantile_is_identity():
    for q in (0.0, 0.1, 0.3, 0.77, 1.0):
        assert beta_quantile(1, 1, q) == pytest.approx(q, abs=1e-12)


def test_beta_n_1_closed_form():
    assert beta_quantile(4, 1, 0.75) == pytest.approx(0.75 ** 0.25, abs=1e-12)
    assert beta_quantile(2, 2, 0.5) == pytest.approx(0.5, abs=1e-12)


def test_cost_examples():
    assert bayes_ucb_cost(BetaPrior(), OutcomeCounts(0, 0), 1) == pytest.approx(math.log(2), abs=1e-9)
    # frozen from direct evaluation (mpmath agrees)
    assert bayes_ucb_cost(BetaPrior(), OutcomeCounts(3, 0), 3) == pytest.approx(0.071921, abs=1e-6)


def test_cost_is_floored():
    c = ucb_cost(1, 1 + 10 ** 6, 10)
    assert math.isfinite(c) and c <= -math.log(P_FLOOR) + 1e-12


def test_entropy_examples():
    assert beta_entropy(1, 1) == pytest.approx(0.0, abs=1e-12)
    assert beta_entropy(2, 2) == pytest.approx(-0.1250928, abs=1e-7)


def test_entropy_matches_scipy():
    rng = random.Random(3)
    for _ in range(10):
        a, b = rng.uniform(0.5, 20), rng.uniform(0.5, 20)
        assert beta_entropy(a, b) == pytest.approx(stats.beta(a, b).entropy(), abs=1e-9)


def test_entropy_quadrature():
    a, b = 3.5, 7.25
    dens = stats.beta(a, b).pdf
    val, _ = integrate.quad(lambda x: -dens(x) * math.log(dens(x)) if dens(x) > 0 else 0.0, 0, 1)
    assert beta_entropy(a, b) == pytest.approx(val, abs=1e-6)


@pytest.mark.parametrize("bad", [(0, 1), (1, -2)])
def test_invalid_prior(bad):
    with pytest.raises(ValueError):
        BetaPrior(*bad)


def test_invalid_arguments():
    with pytest.raises(ValueError):
        beta_quantile(1, 1, 1.5)
    with pytest.raises(ValueError):
        ucb_level(0)
    with pytest.raises(ValueError):
        OutcomeCounts(-1, 0)


def test_cost_consistency_with_true_probability():
    rng = random.Random(11)
    p = 0.3
    s = sum(rng.random() < p for _ in range(10_000))
    cost = bayes_ucb_cost(BetaPrior(), OutcomeCounts(s, 10_000 - s), 5)
    assert abs(cost + math.log(p)) < 0.01 * 10  # relative slack on the log scale
    assert abs(math.exp(-cost) - p) < 0.01


@given(st.floats(0.5, 50), st.floats(0.5, 50), st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_quantile_monotone_in_level(a, b, q1, q2):
    lo, hi = sorted((q1, q2))
    assert beta_quantile(a, b, lo) <= beta_quantile(a, b, hi) + 1e-12


@given(st.floats(0.5, 50), st.floats(0.5, 50), st.floats(0.01, 0.99))
def test_quantile_reflection(a, b, q):
    assert beta_quantile(a, b, q) == pytest.approx(1 - beta_quantile(b, a, 1 - q), abs=1e-9)


@given(st.integers(0, 200), st.integers(0, 200), st.integers(1, 1000))
def test_cost_drops_with_successes_and_iterations(s, f, i):
    c = bayes_ucb_cost(BetaPrior(), OutcomeCounts(s, f), i)
    assert c >= 0
    assert bayes_ucb_cost(BetaPrior(), OutcomeCounts(s + 1, f), i) <= c + 1e-12
    assert bayes_ucb_cost(BetaPrior(), OutcomeCounts(s, f), i + 1) <= c + 1e-12
    assert bayes_ucb_cost(BetaPrior(), OutcomeCounts(s, f + 1), i) >= c - 1e-12
