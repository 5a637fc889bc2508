import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bayesplit.mcmc import (PosteriorTrace, align_labels, batch_se, estimate_log_marginal,
                            map_labels, permute_params, retained_count, run_chains)
from bayesplit.sbm import SbmModel, sbm_exact_log_marginal, sbm_log_likelihood
from conftest import graph_from_edges


def _trace(loglik, chain=None):
    loglik = np.asarray(loglik, float)
    return PosteriorTrace(loglik, np.zeros((len(loglik), 1), np.int64), {}, 0, 1, len(loglik), chain)


def test_estimate_examples():
    assert estimate_log_marginal(_trace([-3.0]))[0] == -3.0
    assert estimate_log_marginal(_trace([-1.0, -1.0]))[0] == pytest.approx(-1.0)


def test_estimate_point_mass_is_exact():
    est, se = estimate_log_marginal(_trace(np.full(500, -42.5), np.repeat([0, 1], 250)))
    assert est == pytest.approx(-42.5, abs=1e-12) and se == pytest.approx(0.0, abs=1e-12)


def test_estimate_all_zero_likelihood_warns():
    with pytest.warns(RuntimeWarning):
        assert estimate_log_marginal(_trace([-np.inf, -np.inf]))[0] == -np.inf


def test_estimator_with_prior_draws_matches_bernoulli_integral():
    # one Bernoulli(p) success, p ~ U(0,1): the marginal is exactly 1/2
    rng = np.random.default_rng(0)
    p = rng.random(200000)
    est, se = estimate_log_marginal(_trace(np.log(p)))
    assert est == pytest.approx(math.log(0.5), abs=4 * se + 1e-3)


def test_estimator_with_prior_draws_matches_sbm_oracle():
    # averaging the likelihood over prior draws of B converges to the exact
    # marginal; this checks the estimator machinery on the conjugate oracle
    rng = np.random.default_rng(1)
    for rep in range(5):
        n = int(rng.integers(4, 8))
        adj = np.triu(rng.random((n, n)) < 0.5, 1)
        g = graph_from_edges(n, np.argwhere(adj))
        z = rng.integers(2, size=n)
        draws = rng.random((20000, 3))
        ll = [sbm_log_likelihood(g, z, np.array([[a, b], [b, c]])) for a, b, c in draws]
        est, _ = estimate_log_marginal(_trace(ll))
        assert abs(est - sbm_exact_log_marginal(g, z)) < 0.1


def test_retained_count_and_thinning():
    g = graph_from_edges(4, [(0, 1), (2, 3)])
    m = SbmModel(g)
    tr = run_chains(m, np.random.SeedSequence(0).spawn(2), 50, 10, thinning=3)
    assert retained_count(50, 10, 3) == 13
    assert len(tr) == 26 and tr.n_chains == 2


def test_run_chains_deterministic():
    g = graph_from_edges(5, [(0, 1), (1, 2), (3, 4)])
    m = SbmModel(g)
    a = run_chains(m, np.random.SeedSequence(9).spawn(2), 40, 10)
    b = run_chains(m, np.random.SeedSequence(9).spawn(2), 40, 10)
    assert np.array_equal(a.loglik, b.loglik) and np.array_equal(a.labels, b.labels)


def test_align_labels_undoes_switching():
    base = np.array([0, 0, 0, 1, 1, 1])
    labels = np.array([base, 1 - base, base, 1 - base])
    out, perms = align_labels(labels, 2)
    assert (out == base).all()
    assert perms[1].tolist() == [1, 0]


def test_permute_params_follows_labels():
    params = {"pi": np.array([[0.2, 0.8]]), "B": np.array([[[0.9, 0.1], [0.1, 0.5]]])}
    out = permute_params(params, np.array([[1, 0]]), {"pi": (0,), "B": (0, 1)})
    assert out["pi"][0].tolist() == [0.8, 0.2]
    assert out["B"][0].tolist() == [[0.5, 0.1], [0.1, 0.9]]


def test_map_labels_ties_to_lower_block():
    labels = np.array([[0, 1], [1, 1]])
    assert map_labels(labels, 2).tolist() == [0, 1]


def test_batch_se_iid_scale():
    x = np.random.default_rng(0).standard_normal(20000)
    assert batch_se(x) == pytest.approx(1 / math.sqrt(len(x)), rel=0.5)


@given(st.integers(1, 6), st.integers(2, 30), st.integers(0, 2**31 - 1))
def test_aligned_labels_are_permutations_of_draws(K, n, seed):
    rng = np.random.default_rng(seed)
    labels = rng.integers(K, size=(5, n))
    out, perms = align_labels(labels, K)
    for l in range(5):
        assert sorted(perms[l]) == list(range(K))
        assert np.array_equal(out[l], perms[l][labels[l]])
