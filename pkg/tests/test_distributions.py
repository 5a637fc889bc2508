import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from bayesplit.distributions import (logsumexp_mean, sample_dirichlet, truncated_beta,
                                     truncated_beta_pair, truncated_normal)


@given(st.floats(0.3, 30), st.floats(0.3, 30), st.floats(0, 1), st.floats(0, 1),
       st.integers(0, 2**31 - 1))
def test_truncated_beta_stays_in_range(a, b, x, y, seed):
    lo, hi = min(x, y), max(x, y)
    v = truncated_beta(np.random.default_rng(seed), a, b, lo, hi)
    assert lo <= v <= hi or (hi <= lo and v == lo)


def test_truncated_beta_distribution_ks():
    rng = np.random.default_rng(0)
    a, b, lo, hi = 3.0, 5.0, 0.5, 0.8
    x = np.array([truncated_beta(rng, a, b, lo, hi) for _ in range(4000)])
    d = stats.beta(a, b)
    cdf = lambda v: (d.cdf(v) - d.cdf(lo)) / (d.cdf(hi) - d.cdf(lo))
    assert stats.kstest(x, cdf).pvalue > 1e-3


def test_truncated_beta_far_tail_inverse_cdf():
    # mass of [0.9, 1] under Beta(200, 800) is far below the rejection floor
    rng = np.random.default_rng(1)
    x = [truncated_beta(rng, 200, 800, 0.9, 1.0) for _ in range(50)]
    assert min(x) >= 0.9 and np.mean(x) < 0.91


@given(st.integers(0, 2**31 - 1), st.integers(0, 1), st.floats(0.01, 0.9))
def test_truncated_beta_pair_region(seed, side, t):
    rng = np.random.default_rng(seed)
    x, y = truncated_beta_pair(rng, (40, 2), (2, 40), t, side)
    d = x - y
    assert (d >= t) if side == 1 else (0 <= d < t)


@given(st.floats(-5, 5), st.floats(0.05, 5), st.floats(-20, 20), st.floats(0, 10),
       st.integers(0, 2**31 - 1))
def test_truncated_normal_in_range(loc, sd, lo, width, seed):
    v = truncated_normal(np.random.default_rng(seed), loc, sd, lo, lo + width)
    assert lo <= v <= lo + width


def test_truncated_normal_moments():
    rng = np.random.default_rng(2)
    x = np.array([truncated_normal(rng, 0.0, 1.0, 1.0, 3.0) for _ in range(20000)])
    ref = stats.truncnorm(1.0, 3.0)
    assert abs(x.mean() - ref.mean()) < 4 * ref.std() / math.sqrt(len(x))


def test_logsumexp_mean_examples():
    assert logsumexp_mean([-3.0]) == -3.0
    assert logsumexp_mean([-1.0, -1.0]) == pytest.approx(-1.0)
    assert logsumexp_mean([0.0, math.log(3.0)]) == pytest.approx(math.log(2.0))
    assert logsumexp_mean([-1e4, -1e4 + math.log(3.0)]) == pytest.approx(-1e4 + math.log(2.0))


def test_dirichlet_tiny_concentrations():
    x = sample_dirichlet(np.random.default_rng(0), [1e-300, 1e-300])
    assert x.sum() == pytest.approx(1.0)
