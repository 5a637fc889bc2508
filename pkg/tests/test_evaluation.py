import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from sklearn.metrics import normalized_mutual_info_score

from bayesplit.config import RunConfig
from bayesplit.evaluation import (dic, erm_bruteforce_max, erm_modularity, nmi,
                                  normalized_laplacian, spectral_suggest_k, split_half_consistency)
from bayesplit.generators import GenSpec, gen_ee, planted_block_matrix
from bayesplit.mcmc import PosteriorTrace
from conftest import graph_from_edges


@st.composite
def graphs(draw, min_n=1, max_n=10):
    n = draw(st.integers(min_n, max_n))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return graph_from_edges(n, [p for p, m in zip(pairs, mask) if m])


def test_erm_examples(two_triangles, triangle):
    assert erm_modularity(two_triangles, [0, 0, 0, 1, 1, 1]) == pytest.approx(6.0)
    assert erm_modularity(triangle, [0, 0, 0]) == pytest.approx(0.0)
    # three singletons: -(1/3)^2 * 6 each
    assert erm_modularity(triangle, [0, 1, 2]) == pytest.approx(-2.0)


@given(graphs())
def test_erm_zero_for_one_community(g):
    assert erm_modularity(g, np.zeros(g.n, dtype=int)) == pytest.approx(0.0, abs=1e-9)


@given(graphs(), st.data())
def test_erm_invariant_to_relabelling(g, data):
    z = np.array(data.draw(st.lists(st.integers(0, 3), min_size=g.n, max_size=g.n)))
    perm = np.array(data.draw(st.permutations(range(4))))
    assert erm_modularity(g, perm[z]) == pytest.approx(erm_modularity(g, z), abs=1e-9)


def test_bruteforce_two_triangles(two_triangles):
    z, q = erm_bruteforce_max(two_triangles)
    assert q == pytest.approx(6.0)
    assert nmi(z.labels, [0, 0, 0, 1, 1, 1]) == 1.0


def test_bruteforce_matches_enumeration_on_small_graph():
    g = graph_from_edges(5, [(0, 1), (1, 2), (2, 0), (2, 3), (3, 4)])
    import itertools
    best = max(erm_modularity(g, z) for z in itertools.product(range(5), repeat=5))
    assert erm_bruteforce_max(g)[1] == pytest.approx(best)
    best2 = max(erm_modularity(g, z) for z in itertools.product(range(2), repeat=5))
    assert erm_bruteforce_max(g, bipartition=True)[1] == pytest.approx(best2)


def test_bruteforce_size_limit():
    with pytest.raises(ValueError):
        erm_bruteforce_max(graph_from_edges(13, [(0, 1)]))


@given(graphs(min_n=2))
def test_laplacian_spectrum(g):
    deg = g.adjacency.sum(axis=1)
    if not (deg > 0).all():
        return  # isolated nodes are removed; covered separately
    vals = np.linalg.eigvalsh(normalized_laplacian(g))
    assert vals.min() >= -1e-9 and vals.max() <= 2 + 1e-9
    n_comp = connected_components(csr_matrix(g.adjacency), directed=False)[0]
    assert int(np.sum(np.abs(vals) < 1e-8)) == n_comp


def test_isolated_nodes_removed_with_warning(caplog):
    g = graph_from_edges(4, [(0, 1)])
    assert normalized_laplacian(g).shape == (2, 2)
    assert "isolated" in caplog.text


def test_eigengap_two_cliques():
    edges = [(i, j) for b in (0, 5) for i in range(b, b + 5) for j in range(i + 1, b + 5)]
    g = graph_from_edges(10, edges + [(0, 5)])
    k, vals = spectral_suggest_k(g)
    assert k == 2 and np.all(np.diff(vals) >= 0)


def test_eigengap_on_interactions(small_sequence):
    k, vals = spectral_suggest_k(small_sequence)
    assert 1 <= k <= 3 and len(vals) == 3


labelings = st.integers(1, 40).flatmap(
    lambda n: st.tuples(st.lists(st.integers(0, 4), min_size=n, max_size=n),
                        st.lists(st.integers(0, 4), min_size=n, max_size=n)))


@given(labelings)
def test_nmi_bounds_symmetry_and_oracle(pair):
    w, c = pair
    v = nmi(w, c)
    assert 0.0 <= v <= 1.0
    assert v == pytest.approx(nmi(c, w), abs=1e-12)
    if len(set(w)) > 1 and len(set(c)) > 1:
        assert v == pytest.approx(normalized_mutual_info_score(w, c, average_method="arithmetic"),
                                  abs=1e-9)


@given(st.lists(st.integers(0, 5), min_size=1, max_size=40), st.permutations(range(6)))
def test_nmi_is_one_under_relabelling(w, perm):
    w = np.array(w)
    assert nmi(w, np.array(perm)[w]) == 1.0


def test_nmi_examples():
    assert nmi([1, 1, 2, 2], [2, 2, 1, 1]) == 1.0
    assert nmi([0, 0, 0], [0, 0, 0]) == 1.0
    assert nmi([0, 0, 0, 0], [0, 1, 0, 1]) == 0.0
    assert nmi([0, 0, 1, 1], [0, 1, 0, 1]) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        nmi([0, 1], [0])
    with pytest.raises(ValueError):
        nmi([], [])


def _trace(ll, params):
    n = len(ll)
    return PosteriorTrace(np.asarray(ll, float), np.zeros((n, 2), np.int64), params, 0, 1, n)


def test_dic_point_mass_has_no_effective_parameters():
    tr = _trace([-5.0] * 4, {"b": np.full((4, 1), 0.3)})
    assert dic(tr, lambda p, z: -5.0) == pytest.approx(10.0)


def test_dic_shifts_with_likelihood_constant():
    rng = np.random.default_rng(0)
    b = rng.normal(size=(50, 1))
    f = lambda p, z: float(-0.5 * np.sum(p["b"] ** 2))
    base = dic(_trace([f({"b": x}, None) for x in b], {"b": b}), f)
    c = 3.7
    g = lambda p, z: f(p, z) + c
    shifted = dic(_trace([g({"b": x}, None) for x in b], {"b": b}), g)
    assert shifted == pytest.approx(base - 2 * c)
    per_draw = dic(_trace(np.zeros(50), {"b": b}), f, per_draw=True)
    assert per_draw == pytest.approx(base)


def test_dic_errors():
    with pytest.raises(ValueError):
        dic(_trace([-1.0], {"b": np.zeros((1, 1))}), lambda p, z: 0.0)
    with pytest.raises(ValueError):
        dic(_trace([-1.0, -2.0], {}), lambda p, z: 0.0)


def test_split_half_consistency_report():
    seq, _ = gen_ee(GenSpec("ee", seed=0, K=2, M=600, B=planted_block_matrix(2, 0.95)))
    cfg = RunConfig(model="ee", seed=0, sweeps=400, burn_in=100, chains=1)
    rep = split_half_consistency(seq, "ee", cfg, np.random.default_rng(0))
    assert rep.name == "split_half_nmi"
    assert 0.0 <= rep.value <= 1.0 or math.isnan(rep.value)
    assert rep.auxiliary["common_nodes"] + rep.auxiliary["excluded_nodes"] <= seq.n
    # nodes seen in only one half are excluded, never silently relabelled
    assert rep.auxiliary["common_nodes"] > 0
    with pytest.raises(ValueError):
        split_half_consistency(seq, "ee", cfg.replace(min_size=1000), np.random.default_rng(0))
